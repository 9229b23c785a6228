use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentKind, AgentOutput, AgentSpec, ForecastContext, Forecaster, InitialPolicy};
use crate::error::{Error, Result};
use crate::market::MarketParams;

/// Result of a scripted rule before any bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedForecast {
    pub value: f64,
    /// The raw rule output lay outside `[0, cap]`.
    pub clamped: bool,
}

fn clamp_to_cap(raw: f64, params: &MarketParams) -> ScriptedForecast {
    let value = raw.clamp(0.0, params.cap);
    ScriptedForecast { value, clamped: value != raw }
}

fn scripted_only(kind: &AgentKind) -> Result<()> {
    if let AgentKind::Llm(_) = kind {
        return Err(Error::InvalidInput("llm agents are not scripted".into()));
    }
    Ok(())
}

/// Rational-bubble forecast of period `period`, or `p^f` once it would cross the cap.
fn bubble_value(c: f64, period: u32, params: &MarketParams) -> f64 {
    let pf = params.fundamental_price();
    let v = pf + c * params.gross_return().powi(period as i32);
    if v > params.cap {
        pf
    } else {
        v
    }
}

/// Forecast of `p_{t+1}` made at period `t >= 2` by a scripted rule.
pub fn scripted_forecast(
    kind: &AgentKind,
    params: &MarketParams,
    ctx: &ForecastContext,
) -> Result<ScriptedForecast> {
    scripted_only(kind)?;
    ctx.validate()?;
    let last = ctx.prices.last().copied();
    let naive = || last.unwrap_or(*ctx.own_predictions.last().expect("t >= 1"));
    let raw = match *kind {
        AgentKind::Fundamentalist => params.fundamental_price(),
        AgentKind::Naive => naive(),
        AgentKind::Trend { lambda } => match ctx.prices.as_slice() {
            [.., prev2, prev1] => prev1 + lambda * (prev1 - prev2),
            _ => naive(),
        },
        AgentKind::Adaptive { weight } => match ctx.prices.as_slice() {
            [_, .., prev1] if ctx.t >= 3 => {
                weight * prev1 + (1.0 - weight) * ctx.own_predictions[ctx.t as usize - 1]
            }
            _ => naive(),
        },
        AgentKind::RationalBubble { c } => bubble_value(c, ctx.t + 1, params),
        AgentKind::Llm(_) => unreachable!(),
    };
    Ok(clamp_to_cap(raw, params))
}

/// The pair `(p^e_1, p^e_2)` a scripted agent submits at the start.
pub fn initial_pair<R: Rng>(
    spec: &AgentSpec,
    params: &MarketParams,
    rng: &mut R,
) -> Result<([f64; 2], bool)> {
    scripted_only(&spec.kind)?;
    let raw = match spec.initial {
        InitialPolicy::Fixed(pair) => pair,
        InitialPolicy::Uniform => {
            let [lo, hi] = params.guidance_range;
            [rng.random_range(lo..=hi), rng.random_range(lo..=hi)]
        }
        InitialPolicy::Default => match spec.kind {
            AgentKind::Fundamentalist => [params.fundamental_price(); 2],
            AgentKind::RationalBubble { c } => {
                let first = bubble_value(c, 1, params);
                let second = if first == params.fundamental_price() && c > 0.0 {
                    first
                } else {
                    bubble_value(c, 2, params)
                };
                [first, second]
            }
            _ => {
                let [lo, hi] = params.guidance_range;
                [(lo + hi) / 2.0; 2]
            }
        },
    };
    let a = clamp_to_cap(raw[0], params);
    let b = clamp_to_cap(raw[1], params);
    Ok(([a.value, b.value], a.clamped || b.clamped))
}

/// A scripted rule with its private generator and cap flag.
pub struct ScriptedAgent {
    spec: AgentSpec,
    params: MarketParams,
    rng: ChaCha8Rng,
    cap_known: bool,
}

impl ScriptedAgent {
    pub fn new(spec: AgentSpec, params: MarketParams, seed: u64) -> Result<Self> {
        scripted_only(&spec.kind)?;
        let cap_known = matches!(spec.kind, AgentKind::RationalBubble { .. });
        Ok(Self {
            spec,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cap_known,
        })
    }

    fn output<T>(&mut self, value: T, clamped: bool) -> AgentOutput<T> {
        let mut out = AgentOutput::plain(value);
        if clamped {
            out.flags.push("cap_clamped".into());
            if !self.cap_known {
                self.cap_known = true;
                out.cap_disclosed = true;
            }
        }
        out
    }
}

impl Forecaster for ScriptedAgent {
    fn initial(&mut self) -> Result<AgentOutput<[f64; 2]>> {
        let (pair, clamped) = initial_pair(&self.spec, &self.params, &mut self.rng)?;
        Ok(self.output(pair, clamped))
    }

    fn forecast(&mut self, ctx: &ForecastContext) -> Result<AgentOutput<f64>> {
        let f = scripted_forecast(&self.spec.kind, &self.params, ctx)?;
        Ok(self.output(f.value, f.clamped))
    }

    fn cap_known(&self) -> bool {
        self.cap_known
    }
}
