//! Limiting laws of the maximal pairwise correlation among independent
//! covariates, and the screening thresholds derived from them.
//!
//! The Pearson law is stated for the squared maximum `W² = max_{i<j} ρ²_ij`
//! after the affine normalization `(W² - a) / b`. All powers of `p` are
//! evaluated as `exp(k · ln p)` and the Beta function in log space, so the
//! constants stay finite for very large `p` and `n`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Location/scale constants `a_{p,n}`, `b_{p,n}` and the auxiliary `c_{p,n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizingConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n: usize,
    pub p: usize,
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(domain(format!("sample size n = {n} must be at least {min}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    Ok(())
}

/// `p^{-4/(n-2)}`.
fn p_power(n: usize, p: usize) -> f64 {
    (-4.0 * (p as f64).ln() / (n as f64 - 2.0)).exp()
}

impl NormalizingConstants {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        check_n(n, 3)?;
        if p < 2 {
            return Err(domain(format!("dimension p = {p} must be at least 2")));
        }
        let half = (n as f64 - 2.0) / 2.0;
        let q = p_power(n, p);
        // ln c = (1/half) * [ ln(half) + ln B(1/2, half) + 0.5 ln(1 - q) ]
        let ln_c = (half.ln() + ln_beta(0.5, half) + 0.5 * (-q).ln_1p()) / half;
        let c = ln_c.exp();
        Ok(Self {
            a: 1.0 - q * c,
            b: q * c / half,
            c,
            n,
            p,
        })
    }

    /// `(W² - a) / b`.
    pub fn normalize(&self, w2: f64) -> f64 {
        (w2 - self.a) / self.b
    }
}

/// Limiting CDF of `(W² - a_{p,n}) / b_{p,n}`.
pub fn limiting_cdf_w2(x: f64, n: usize) -> Result<f64> {
    check_n(n, 3)?;
    let half = (n as f64 - 2.0) / 2.0;
    if x >= half {
        return Ok(1.0);
    }
    let base = 1.0 - x / half;
    Ok((-0.5 * base.powf(half)).exp())
}

/// Threshold `t*` on the squared Pearson correlation: the `1 - alpha`
/// quantile of the limiting law, mapped back through `a + b x`.
pub fn w2_threshold(alpha: f64, n: usize, p: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let k = NormalizingConstants::new(n, p)?;
    let exponent = 2.0 / (n as f64 - 2.0);
    let tail = (-2.0 * (-alpha).ln_1p()).powf(exponent);
    Ok(1.0 - p_power(n, p) * k.c * tail)
}

/// Quantile `x_α` of the Spearman limit `exp{-(8π)^{-1/2} e^{-x/2}}`.
pub fn spearman_limit_quantile(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-2.0 * (-(8.0 * PI).sqrt() * (-alpha).ln_1p()).ln())
}

/// Limiting CDF of `(n-1) S² - 4 ln p + ln ln p`.
pub fn spearman_limit_cdf(x: f64) -> f64 {
    (-(8.0 * PI).powf(-0.5) * (-x / 2.0).exp()).exp()
}

/// `(n-1) S² - 4 ln p + ln ln p`.
pub fn spearman_statistic(s2: f64, n: usize, p: usize) -> f64 {
    let lp = (p as f64).ln();
    (n as f64 - 1.0) * s2 - 4.0 * lp + lp.ln()
}

/// Threshold `s*` on the squared Spearman rho.
///
/// Fails with [`Error::ThresholdSaturated`] when `s* >= 1`, meaning no pair
/// can pass the Spearman screen at this `(n, p, alpha)`.
pub fn spearman_threshold(alpha: f64, n: usize, p: usize) -> Result<f64> {
    check_n(n, 3)?;
    if p < 3 {
        return Err(domain(format!(
            "spearman threshold needs p >= 3 so that ln ln p > 0, got {p}"
        )));
    }
    let x_alpha = spearman_limit_quantile(alpha)?;
    let lp = (p as f64).ln();
    let s = (4.0 * lp - lp.ln() + x_alpha) / (n as f64 - 1.0);
    if s >= 1.0 {
        return Err(Error::ThresholdSaturated { s_star: s, n, p, alpha });
    }
    Ok(s.max(f64::MIN_POSITIVE))
}

/// Bound `r0 = 1 - p^{-(4+δ)/(n-3)}` on the maximal null pairwise R².
///
/// `p = 1` gives the degenerate value 0 and logs a warning.
pub fn r_squared_threshold(delta: f64, n: usize, p: usize) -> Result<f64> {
    check_n(n, 4)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain(format!("delta = {delta} must be positive")));
    }
    if p == 0 {
        return Err(domain("dimension p must be positive"));
    }
    if p == 1 {
        log::warn!("r_squared_threshold with p = 1 is degenerate (r0 = 0)");
    }
    let expo = -(4.0 + delta) * (p as f64).ln() / (n as f64 - 3.0);
    Ok(-expo.exp_m1())
}

/// Growth regime of `ln p` relative to `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regime {
    SubExponential,
    Exponential { beta: f64 },
    SuperExponential,
}

/// The exponential-case limit is evaluated exactly in its published form,
/// `1 - exp{K(β) e^{(x+8β)/2}}`. That expression is decreasing in `x` and
/// negative everywhere, so it is not a distribution function; callers should
/// treat its output as a diagnostic only.
pub const EXPONENTIAL_CASE_AS_PRINTED: bool = true;

/// `K(β) = (β / (2π (1 - 4 e^{-4β})))^{1/2}`, defined for `β > ln(4)/4`.
pub fn exponential_case_k(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain(format!("beta = {beta} must lie in (0, inf)")));
    }
    let denom = 2.0 * PI * (1.0 - 4.0 * (-4.0 * beta).exp());
    if denom <= 0.0 {
        return Err(domain(format!(
            "K(beta) is undefined for beta = {beta} <= ln(4)/4"
        )));
    }
    Ok((beta / denom).sqrt())
}

/// Normalized statistic built from `T = ln(1 - W²)` for each regime:
/// `n T + 4 ln p - ln ln p` (sub-exponential and exponential) or
/// `n T + 4n/(n-2) ln p - ln n` (super-exponential).
pub fn phase_transition_statistic(regime: Regime, w2: f64, n: usize, p: usize) -> Result<f64> {
    check_n(n, 3)?;
    let nf = n as f64;
    let lp = (p as f64).ln();
    let t = (-w2).ln_1p();
    Ok(match regime {
        Regime::SubExponential | Regime::Exponential { .. } => nf * t + 4.0 * lp - lp.ln(),
        Regime::SuperExponential => nf * t + 4.0 * nf / (nf - 2.0) * lp - nf.ln(),
    })
}

/// Limiting CDF of the regime's normalized statistic.
pub fn phase_transition_cdf(regime: Regime, x: f64, n: usize, _p: usize) -> Result<f64> {
    check_n(n, 3)?;
    Ok(match regime {
        Regime::SubExponential => -(-(8.0 * PI).powf(-0.5) * (x / 2.0).exp()).exp_m1(),
        Regime::Exponential { beta } => {
            let k = exponential_case_k(beta)?;
            -(k * ((x + 8.0 * beta) / 2.0).exp()).exp_m1()
        }
        Regime::SuperExponential => -(-(2.0 * PI).powf(-0.5) * (x / 2.0).exp()).exp_m1(),
    })
}

/// Thresholds for one `(alpha, delta, n, p)` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawThresholds {
    pub alpha: f64,
    pub delta: f64,
    pub n: usize,
    pub p: usize,
    pub t_star: f64,
    /// `None` when the Spearman threshold is saturated or undefined (p < 3).
    pub s_star: Option<f64>,
    pub r0: f64,
}

impl LawThresholds {
    pub fn new(alpha: f64, delta: f64, n: usize, p: usize) -> Result<Self> {
        let t_star = w2_threshold(alpha, n, p)?;
        let r0 = r_squared_threshold(delta, n, p)?;
        let s_star = match spearman_threshold(alpha, n, p) {
            Ok(s) => Some(s),
            Err(Error::ThresholdSaturated { .. }) => None,
            Err(Error::Domain(_)) if p < 3 => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            alpha,
            delta,
            n,
            p,
            t_star,
            s_star,
            r0,
        })
    }
}
