//! Closed-form concentration levels, growth bounds, and invariance thresholds.

use std::io::Write;

use crate::error::{Error, Result};
use crate::graphon::{DiscretizedGraphon, SampledNetwork};

/// Concentration level `2 ln(2n/δ) / (n α)`.
pub fn g_bar(n: usize, delta: f64, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} not in (0, 1)")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("{alpha} not in (0, 1]")));
    }
    let n = n as f64;
    Ok(2.0 * (2.0 * n / delta).ln() / (n * alpha))
}

/// Rates of the comparison system `u̇ᵢ ≤ c uᵢ + d·mean(u) + g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub c: f64,
    pub d: f64,
    pub g: f64,
    pub horizon: f64,
}

impl BoundParams {
    pub fn new(c: f64, d: f64, g: f64, horizon: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", "must be positive"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::param("d", "must be positive"));
        }
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::param("g", "must be non-negative"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param("horizon", "must be positive"));
        }
        Ok(BoundParams { c, d, g, horizon })
    }
}

/// `g/(c+d) · (e^{(c+d)T} − 1)`: the value at `T` of the comparison system started from zero.
pub fn positive_system_bound(p: &BoundParams) -> f64 {
    let k = p.c + p.d;
    p.g / k * (k * p.horizon).exp_m1()
}

/// `(1 + n^{-1/3}) / (1 − n^{-1/3})`, or 1 in the large-`n` limit.
fn finite_size_factor(n: Option<usize>) -> Result<f64> {
    match n {
        None => Ok(1.0),
        Some(n) if n >= 2 => {
            let x = (n as f64).cbrt().recip();
            Ok((1.0 + x) / (1.0 - x))
        }
        Some(n) => Err(Error::param("n", format!("{n} must be at least 2"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaThreshold {
    /// Equality point; the invariance condition requires a strictly larger `p`.
    pub p: f64,
    /// `false` when `p > 1`, i.e. no edge probability suffices at this size.
    pub feasible: bool,
}

/// Smallest edge probability at which the phase shift `beta` keeps the half-circle invariant.
/// `n = None` is the large-network limit.
pub fn beta_threshold_p(beta: f64, n: Option<usize>) -> Result<BetaThreshold> {
    if !(beta > 0.0 && beta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::param("beta", format!("{beta} not in (0, pi/2)")));
    }
    let p = 2.0 * beta.sin() / beta.cos().powi(2) * finite_size_factor(n)?;
    Ok(BetaThreshold {
        p,
        feasible: p <= 1.0,
    })
}

/// Largest phase shift admitted by edge probability `p` at size `n` (`None` for the limit).
pub fn max_beta_for(p: f64, n: Option<usize>) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("{p} not in (0, 1]")));
    }
    let r = 2.0 / p * finite_size_factor(n)?;
    // Root of s² + R s − 1 = 0 written to avoid cancellation for large R.
    let s = 2.0 / (r + (r * r + 4.0).sqrt());
    Ok(s.asin())
}

/// Erdős–Rényi connectivity threshold `ln n / n`.
pub fn connectivity_threshold(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", format!("{n} must be at least 2")));
    }
    let n = n as f64;
    Ok(n.ln() / n)
}

/// Per-row deviations `½ ((1/n) Σⱼ (Aᵢⱼ/α − W⁽ⁿ⁾ᵢⱼ))²`.
pub fn empirical_g(net: &SampledNetwork, d: &DiscretizedGraphon) -> Result<Vec<f64>> {
    if net.n() != d.n() {
        return Err(Error::Dimension {
            expected: d.n(),
            found: net.n(),
        });
    }
    let n = net.n() as f64;
    let inv_alpha = 1.0 / net.alpha();
    Ok((0..net.n())
        .map(|i| {
            let w: f64 = d.row(i).iter().sum();
            let dev = (net.degree(i) as f64 * inv_alpha - w) / n;
            0.5 * dev * dev
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCurveRow {
    pub n: usize,
    pub beta: f64,
    pub p_min: f64,
}

/// Minimum edge probability for each `n`: the connectivity threshold when `beta == 0`,
/// the invariance threshold otherwise. Infeasible sizes carry `p_min > 1`.
pub fn bound_curve(ns: &[usize], beta: f64) -> Result<Vec<BoundCurveRow>> {
    ns.iter()
        .map(|&n| {
            let p_min = if beta == 0.0 {
                connectivity_threshold(n)?
            } else {
                beta_threshold_p(beta, Some(n))?.p
            };
            Ok(BoundCurveRow { n, beta, p_min })
        })
        .collect()
}

pub fn write_bound_curve<W: Write>(rows: &[BoundCurveRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,beta,p_min")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{}",
            r.n,
            crate::experiments::fmt_g9(r.beta),
            crate::experiments::fmt_g9(r.p_min)
        )?;
    }
    Ok(())
}
