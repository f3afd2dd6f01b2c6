use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Smallest x in [0, 1] with I_x(a, b) ≥ p, by bisection.
fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Clopper–Pearson interval for a binomial proportion.
pub fn binomial_ci(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Eval(
            "confidence interval needs at least one trial".into(),
        ));
    }
    if successes > trials {
        return Err(Error::Eval(format!(
            "{successes} successes out of {trials} trials"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Eval(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let alpha = 1.0 - level;
    let (x, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, x, n - x + 1.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, x + 1.0, n - x)
    };
    Ok((lower, upper))
}
