//! Prompt templates shown to LLM forecasters.

use super::config::PromptVariant;
use crate::agents::ForecastContext;
use crate::market::MarketParams;

const SYSTEM: &str = include_str!("../../assets/system_prompt.txt");
const INITIAL: &str = include_str!("../../assets/initial_prompt.txt");
const STEP: &str = include_str!("../../assets/step_prompt.txt");
const STEP_NONLINEAR: &str = include_str!("../../assets/step_prompt_nonlinear.txt");

/// Substitute `{key}` placeholders in a single pass, so substituted text is
/// never rescanned.
pub(crate) fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        for (key, value) in vars {
            if tail.starts_with(key) && tail[key.len()..].starts_with('}') {
                out.push_str(value);
                rest = &tail[key.len() + 1..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = tail;
    }
    out.push_str(rest);
    out
}

/// Integer-valued numbers without a decimal point, others in shortest form.
fn plain(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

/// Two-decimal rounding; whole numbers keep one trailing zero ("50.0").
pub fn format_value(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r.fract() == 0.0 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

pub fn cap_note(params: &MarketParams) -> String {
    format!(
        "Note: predictions must be greater than or equal to 0 and less than or equal to {}.",
        plain(params.cap)
    )
}

pub fn cap_message(params: &MarketParams) -> String {
    let cap = plain(params.cap);
    format!("Predictions above {cap} or below 0 are not accepted please submit a prediction between 0 and {cap}.")
}

pub fn build_system_prompt(params: &MarketParams, cap_known: bool) -> String {
    let [lo, hi] = params.guidance_range;
    let mut text = fill(
        SYSTEM,
        &[
            ("horizon", params.horizon.to_string()),
            ("guide_lo", plain(lo)),
            ("guide_hi", plain(hi)),
            ("rate_pct", plain((params.r * 1e6).round() / 1e4)),
            ("dividend", plain(params.mean_dividend)),
        ],
    );
    if cap_known {
        if !text.ends_with('\n') {
            text.push('\n');
        }
        text.push('\n');
        text.push_str(&cap_note(params));
    }
    text
}

pub fn build_initial_prompt(params: &MarketParams) -> String {
    let [lo, hi] = params.guidance_range;
    fill(INITIAL, &[("guide_lo", plain(lo)), ("guide_hi", plain(hi))])
}

/// Markdown history table: one row per period up to `t`, "N/A" where the
/// price is not yet known.
pub fn history_table(prices: &[f64], predictions: &[f64]) -> String {
    let mut out = String::from("| Time Step | Market Price | Your Prediction |\n|---|---|---|");
    let rows = prices.len().max(predictions.len());
    for i in 0..rows {
        let price = prices.get(i).map_or("N/A".to_string(), |&p| format_value(p));
        let pred = predictions.get(i).map_or("N/A".to_string(), |&p| format_value(p));
        out.push_str(&format!("\n| {} | {} | {} |", i + 1, price, pred));
    }
    out
}

pub fn build_step_prompt(ctx: &ForecastContext, variant: PromptVariant) -> String {
    let template = match variant {
        PromptVariant::Neutral => STEP,
        PromptVariant::Nonlinear => STEP_NONLINEAR,
    };
    fill(
        template,
        &[
            ("t", ctx.t.to_string()),
            ("table", history_table(&ctx.prices, &ctx.own_predictions)),
            ("prev", (ctx.t - 1).to_string()),
            ("total", format_value(ctx.total_earnings)),
            ("last", format_value(ctx.last_earnings)),
            ("next", (ctx.t + 1).to_string()),
        ],
    )
}
