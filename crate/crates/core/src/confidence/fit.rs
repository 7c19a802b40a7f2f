//! Fitting second-order distributions to elicited judgements.

use serde::{Deserialize, Serialize};

use super::distribution::{SecondOrderDistribution, BETA_PARAM_MAX, BETA_PARAM_MIN};
use super::special::beta_inc;
use crate::error::{Error, Result};

/// Largest acceptable |cdf(q) - p| at the elicited fractiles.
pub const FIT_RESIDUAL_TOL: f64 = 1e-7;

/// An elicited fractile: the assessor's value `q` below which the parameter
/// falls with probability `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractilePoint {
    pub p: f64,
    pub q: f64,
}

impl FractilePoint {
    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }
}

fn precondition(reason: impl Into<String>) -> Error {
    Error::FitFailure {
        reason: reason.into(),
        residual: f64::INFINITY,
    }
}

/// Beta distribution on the unit interval whose CDF passes through both
/// fractiles. Pair order does not matter.
pub fn fit_beta_from_fractiles(fractiles: &[FractilePoint]) -> Result<SecondOrderDistribution> {
    fit_beta_on(fractiles, 0.0, 1.0)
}

/// As [`fit_beta_from_fractiles`] for a beta scaled onto `[low, high]`.
pub fn fit_beta_on(fractiles: &[FractilePoint], low: f64, high: f64) -> Result<SecondOrderDistribution> {
    if fractiles.len() != 2 {
        return Err(precondition(format!(
            "the beta family takes exactly two fractiles, got {}",
            fractiles.len()
        )));
    }
    if !(low.is_finite() && high.is_finite() && low < high) {
        return Err(precondition(format!(
            "bounds [{low}, {high}] are not a proper interval"
        )));
    }
    let mut pts = [fractiles[0], fractiles[1]];
    pts.sort_by(|a, b| a.p.total_cmp(&b.p));
    let [first, second] = pts;
    if !(first.p > 0.0 && second.p < 1.0) {
        return Err(precondition("fractile levels must lie strictly inside (0, 1)"));
    }
    if first.p >= second.p {
        return Err(precondition("fractile levels must be distinct"));
    }
    if first.q >= second.q {
        return Err(precondition("quantiles must increase with the fractile level"));
    }
    if !(first.q > low && second.q < high) {
        return Err(precondition(format!(
            "quantiles must lie strictly inside ({low}, {high})"
        )));
    }
    let to_unit = |q: f64| (q - low) / (high - low);
    let (q1, p1, q2, p2) = (to_unit(first.q), first.p, to_unit(second.q), second.p);

    let (alpha, beta) = solve_two_fractiles(q1, p1, q2, p2)?;
    let residual = (beta_inc(alpha, beta, q1) - p1)
        .abs()
        .max((beta_inc(alpha, beta, q2) - p2).abs());
    if residual > FIT_RESIDUAL_TOL {
        return Err(Error::FitFailure {
            reason: "no beta within the parameter bounds reproduces both fractiles".into(),
            residual,
        });
    }
    SecondOrderDistribution::beta_on(alpha, beta, low, high)
}

/// Nested one-dimensional solve over mean `m = a / (a + b)` and
/// concentration `s = a + b`: for fixed `s`, `I_{q1}(ms, (1 - m)s)` is
/// decreasing in `m`, which pins the first fractile; the outer solve in
/// `ln s` then matches the second.
fn solve_two_fractiles(q1: f64, p1: f64, q2: f64, p2: f64) -> Result<(f64, f64)> {
    let inner = |s: f64| -> Option<f64> {
        let m_lo = (BETA_PARAM_MIN / s).max(1.0 - BETA_PARAM_MAX / s);
        let m_hi = (BETA_PARAM_MAX / s).min(1.0 - BETA_PARAM_MIN / s);
        if m_lo >= m_hi {
            return None;
        }
        let h = |m: f64| beta_inc(m * s, (1.0 - m) * s, q1) - p1;
        brent(h, m_lo, m_hi, 1e-15)
    };
    let outer = |ln_s: f64| -> Option<(f64, f64)> {
        let s = ln_s.exp();
        let m = inner(s)?;
        Some((m, beta_inc(m * s, (1.0 - m) * s, q2) - p2))
    };

    let (ln_lo, ln_hi) = ((2.0 * BETA_PARAM_MIN).ln(), (2.0 * BETA_PARAM_MAX).ln());
    const GRID: usize = 48;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=GRID {
        let ln_s = ln_lo + (ln_hi - ln_lo) * i as f64 / GRID as f64;
        let Some((_, g)) = outer(ln_s) else {
            prev = None;
            continue;
        };
        if best.is_none_or(|(_, _, r)| g.abs() < r) {
            best = Some((ln_s, g, g.abs()));
        }
        if let Some((ln_prev, g_prev)) = prev {
            if g_prev.signum() != g.signum() || g == 0.0 {
                let root = brent(|x| outer(x).map_or(f64::NAN, |(_, g)| g), ln_prev, ln_s, 1e-14)
                    .ok_or_else(|| precondition("outer solve did not converge"))?;
                let s = root.exp();
                let (m, _) = outer(root).ok_or_else(|| precondition("outer solve left the parameter bounds"))?;
                return Ok((m * s, (1.0 - m) * s));
            }
        }
        prev = Some((ln_s, g));
    }
    let residual = best.map_or(f64::INFINITY, |(_, _, r)| r);
    Err(Error::FitFailure {
        reason: "no beta within the parameter bounds reproduces both fractiles".into(),
        residual,
    })
}

/// Brent's root finder on a bracketing interval. Returns `None` when the
/// endpoints do not bracket a root or the function is undefined.
pub(crate) fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return None;
    }
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let half = 0.5 * (c - b);
        if half.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * half * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(half) };
        fb = f(b);
        if fb.is_nan() {
            return None;
        }
    }
    Some(b)
}

/// Piecewise-linear CDF from a hand-drawn density sketch.
///
/// `points` are `(value, relative density)` pairs; the density is taken as
/// linear between consecutive points, integrated with the trapezoid rule
/// and normalized, and the CDF knots are the normalized running integral.
pub fn fit_sketch(points: &[(f64, f64)]) -> Result<SecondOrderDistribution> {
    if points.len() < 2 {
        return Err(Error::DegenerateSketch("a sketch needs at least two points".into()));
    }
    if points.iter().any(|(x, w)| !x.is_finite() || !w.is_finite() || *w < 0.0) {
        return Err(Error::DegenerateSketch("weights must be finite and nonnegative".into()));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::DegenerateSketch(
            "sketch values must be strictly increasing".into(),
        ));
    }
    let mut running = vec![0.0];
    for w in points.windows(2) {
        let area = 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        running.push(running.last().copied().unwrap_or(0.0) + area);
    }
    let total = *running.last().unwrap_or(&0.0);
    if total <= 0.0 {
        return Err(Error::DegenerateSketch(
            "the sketch encloses no probability mass".into(),
        ));
    }
    let knots = points
        .iter()
        .zip(&running)
        .map(|(&(x, _), &area)| (x, area / total))
        .collect();
    SecondOrderDistribution::piecewise_linear(knots)
}
