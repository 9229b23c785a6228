//! Seed derivation.
//!
//! Every random stream in a run is keyed by a tuple of integers (base seed,
//! repeat, agent index, period, ...). The tuple is folded through SplitMix64
//! so that neighbouring tuples give unrelated seeds.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix an ordered tuple of integers into one 64-bit seed.
pub fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed of repeat `repeat` in a campaign started from `base_seed`.
pub fn repeat_seed(base_seed: u64, repeat: u32) -> u64 {
    base_seed.wrapping_add(repeat as u64)
}

/// Seed for the private generator of agent `agent` in a run.
pub fn agent_seed(run_seed: u64, agent: usize, spec_seed: u64) -> u64 {
    mix(&[run_seed, agent as u64, spec_seed])
}

/// Seed attached to the request agent `agent` sends at period `t`.
pub fn request_seed(config_seed: u64, run_seed: u64, agent: usize, t: u32) -> u64 {
    mix(&[config_seed, run_seed, agent as u64, t as u64])
}
