use rand::RngCore;

use super::special::{beta_inc, beta_pdf};
use crate::error::{Error, Result};

/// Admissible range for beta shape parameters.
pub const BETA_PARAM_MIN: f64 = 1e-3;
pub const BETA_PARAM_MAX: f64 = 1e6;

/// Distribution over the value a parameter will take once an assessment
/// scenario has been carried out.
///
/// The beta family lives on `[low, high]` (the unit interval for
/// probability targets, declared bounds for utility targets) via an affine
/// map. Piecewise-linear CDFs and point masses use natural units directly.
#[derive(Clone, Debug, PartialEq)]
pub enum SecondOrderDistribution {
    Beta {
        alpha: f64,
        beta: f64,
        low: f64,
        high: f64,
    },
    /// Knots `(value, cumulative probability)`; values strictly increasing,
    /// cumulative probabilities nondecreasing from 0 to 1.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
    Degenerate {
        value: f64,
    },
}

impl SecondOrderDistribution {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::beta_on(alpha, beta, 0.0, 1.0)
    }

    pub fn beta_on(alpha: f64, beta: f64, low: f64, high: f64) -> Result<Self> {
        let in_range = |x: f64| (BETA_PARAM_MIN..=BETA_PARAM_MAX).contains(&x);
        if !in_range(alpha) || !in_range(beta) {
            return Err(Error::InvalidDistribution(format!(
                "beta parameters ({alpha}, {beta}) outside [{BETA_PARAM_MIN}, {BETA_PARAM_MAX}]"
            )));
        }
        check_bounds(low, high)?;
        Ok(Self::Beta { alpha, beta, low, high })
    }

    pub fn piecewise_linear(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidDistribution(
                "piecewise-linear cdf needs at least two knots".into(),
            ));
        }
        if points.iter().any(|(x, f)| !x.is_finite() || !f.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite knot".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidDistribution(
                "knot values must be strictly increasing".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::InvalidDistribution(
                "cumulative probabilities must be nondecreasing".into(),
            ));
        }
        let last = points.len() - 1;
        if points[0].1.abs() > 1e-9 || (points[last].1 - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(
                "cumulative probabilities must run from 0 to 1".into(),
            ));
        }
        points[0].1 = 0.0;
        points[last].1 = 1.0;
        Ok(Self::PiecewiseLinear { points })
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidDistribution("degenerate value must be finite".into()));
        }
        Ok(Self::Degenerate { value })
    }

    /// Smallest and largest values with positive probability density.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Beta { low, high, .. } => (*low, *high),
            Self::PiecewiseLinear { points } => (points[0].0, points[points.len() - 1].0),
            Self::Degenerate { value } => (*value, *value),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Beta { alpha, beta, low, high } => low + (high - low) * alpha / (alpha + beta),
            Self::PiecewiseLinear { points } => points
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) * 0.5 * (w[0].0 + w[1].0))
                .sum(),
            Self::Degenerate { value } => *value,
        }
    }

    fn check_support(&self, x: f64) -> Result<()> {
        let (low, high) = self.support();
        if x.is_nan() || x < low || x > high {
            return Err(Error::OutOfSupport { value: x, low, high });
        }
        Ok(())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(match self {
            Self::Beta { alpha, beta, low, high } => beta_inc(*alpha, *beta, (x - low) / (high - low)),
            Self::PiecewiseLinear { points } => {
                let i = points.partition_point(|(v, _)| *v <= x).clamp(1, points.len() - 1);
                let ((x0, f0), (x1, f1)) = (points[i - 1], points[i]);
                f0 + (f1 - f0) * (x - x0) / (x1 - x0)
            }
            Self::Degenerate { .. } => 1.0,
        })
    }

    /// Density at `x`, `None` for a point mass.
    pub fn density(&self, x: f64) -> Result<Option<f64>> {
        self.check_support(x)?;
        Ok(match self {
            Self::Beta { alpha, beta, low, high } => {
                Some(beta_pdf(*alpha, *beta, (x - low) / (high - low)) / (high - low))
            }
            Self::PiecewiseLinear { points } => {
                let i = points.partition_point(|(v, _)| *v <= x).clamp(1, points.len() - 1);
                let ((x0, f0), (x1, f1)) = (points[i - 1], points[i]);
                Some((f1 - f0) / (x1 - x0))
            }
            Self::Degenerate { .. } => None,
        })
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("quantile level {p} is not in (0, 1)")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        match self {
            Self::Beta { alpha, beta, low, high } => low + (high - low) * beta_quantile(*alpha, *beta, p),
            Self::PiecewiseLinear { points } => {
                let i = points
                    .windows(2)
                    .position(|w| w[1].1 >= p && w[1].1 > w[0].1)
                    .unwrap_or(points.len() - 2);
                let ((x0, f0), (x1, f1)) = (points[i], points[i + 1]);
                x0 + (x1 - x0) * (p - f0) / (f1 - f0)
            }
            Self::Degenerate { value } => *value,
        }
    }

    /// Inverse-CDF draw: one uniform from `rng` pushed through the quantile
    /// function, so equal generator states give equal streams.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_unchecked(open_unit(rng))
    }
}

fn check_bounds(low: f64, high: f64) -> Result<()> {
    if !(low.is_finite() && high.is_finite() && low < high) {
        return Err(Error::InvalidDistribution(format!(
            "bounds [{low}, {high}] are not a proper interval"
        )));
    }
    Ok(())
}

/// Uniform on the open interval (0, 1) with 52 bits of resolution.
pub(crate) fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Beta quantile on the unit interval by Newton steps safeguarded with
/// bisection. Bisection is geometric while the bracket spans orders of
/// magnitude, so quantiles near zero (small `a`) are reached quickly.
pub(crate) fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = a / (a + b);
    for _ in 0..400 {
        let f = beta_inc(a, b, x) - p;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let density = beta_pdf(a, b, x);
        let newton = x - f / density;
        let next = if density.is_finite() && density > 0.0 && newton > lo && newton < hi {
            newton
        } else if lo == 0.0 {
            hi * 1e-8
        } else if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if next == 0.0 || (next - x).abs() <= 1e-15 * x {
            return next.max(lo);
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_is_constant() {
        let d = SecondOrderDistribution::degenerate(0.53).unwrap();
        assert_eq!(d.mean(), 0.53);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!((0..100).all(|_| d.sample(&mut rng) == 0.53));
        assert_eq!(d.quantile(0.2).unwrap(), 0.53);
        assert!(d.cdf(0.6).is_err());
    }

    #[test]
    fn uniform_piecewise() {
        let d = SecondOrderDistribution::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!((d.mean() - 0.5).abs() < 1e-9);
        assert!((d.cdf(0.3).unwrap() - 0.3).abs() < 1e-15);
        assert!((d.quantile(0.8).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(d.cdf(1.5), Err(Error::OutOfSupport { .. })));
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.0).is_err());
    }

    #[test]
    fn flat_segments_are_skipped_by_quantile() {
        let d =
            SecondOrderDistribution::piecewise_linear(vec![(0.0, 0.0), (0.2, 0.5), (0.8, 0.5), (1.0, 1.0)]).unwrap();
        assert!((d.quantile(0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!((d.quantile(0.75).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(d.cdf(0.5).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SecondOrderDistribution::beta(0.0, 1.0).is_err());
        assert!(SecondOrderDistribution::beta(2.0, 2e6).is_err());
        assert!(SecondOrderDistribution::beta_on(2.0, 2.0, 1.0, 1.0).is_err());
        assert!(SecondOrderDistribution::piecewise_linear(vec![(0.0, 0.0)]).is_err());
        assert!(SecondOrderDistribution::piecewise_linear(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(SecondOrderDistribution::piecewise_linear(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn beta_quantile_inverts_cdf() {
        for &(a, b) in &[(0.5, 0.5), (2.0, 5.0), (24.9, 20.4), (1e-3, 2.0), (3e4, 1e5)] {
            let d = SecondOrderDistribution::beta(a, b).unwrap();
            for p in [1e-6, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0 - 1e-6] {
                let x = d.quantile(p).unwrap();
                if x == 0.0 {
                    // The true quantile is below the smallest positive double.
                    assert!(d.cdf(f64::MIN_POSITIVE).unwrap() > p);
                } else {
                    assert!((d.cdf(x).unwrap() - p).abs() < 1e-6, "a={a} b={b} p={p} x={x}");
                }
            }
        }
    }

    #[test]
    fn scaled_beta() {
        let d = SecondOrderDistribution::beta_on(2.0, 2.0, -100.0, 300.0).unwrap();
        assert!((d.mean() - 100.0).abs() < 1e-12);
        assert!((d.cdf(100.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((d.quantile(0.5).unwrap() - 100.0).abs() < 1e-8);
    }

    #[test]
    fn open_unit_stays_open() {
        struct Extremes(u64);
        impl RngCore for Extremes {
            fn next_u32(&mut self) -> u32 {
                0
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {}
        }
        let lo = open_unit(&mut Extremes(0));
        let hi = open_unit(&mut Extremes(u64::MAX));
        assert!(lo > 0.0 && hi < 1.0);
    }
}
