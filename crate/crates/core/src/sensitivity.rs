//! One-way sensitivity analysis: sweep a single parameter across its range
//! and report each alternative's expected utility along with the points
//! where the preferred alternative changes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{choose, DecisionModel, Evaluator, ParamRef, Slot};

pub const DEFAULT_GRID: usize = 101;

/// Bisection stops once the bracket is this narrow relative to the range.
const CROSSING_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub alternative: String,
    pub expected_utility: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: ParamRef,
    pub range: (f64, f64),
    pub grid: Vec<f64>,
    /// One series per alternative, in declaration order.
    pub series: Vec<Series>,
    /// Parameter values where the preferred alternative changes, ascending.
    pub crossings: Vec<f64>,
    pub baseline_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotFormat {
    Csv,
    Json,
}

struct Probe<'a> {
    ev: Evaluator,
    slot: Slot,
    param: &'a ParamRef,
}

impl Probe<'_> {
    fn expected_utilities(&self, value: f64) -> Result<Vec<f64>> {
        let mut params = self.ev.base().to_vec();
        self.ev
            .substitute(&mut params, self.slot, value)
            .ok_or_else(|| Error::InvalidSubstitution {
                reference: self.param.to_string(),
                value,
            })?;
        let mut out = vec![0.0; self.ev.n_alts()];
        self.ev.expected_utilities(&params, &mut out);
        Ok(out)
    }

    fn best(&self, value: f64) -> Result<usize> {
        Ok(choose(&self.expected_utilities(value)?).0)
    }

    /// Point in `(lo, hi]` where the preferred alternative stops being
    /// `from`, given that it is preferred at `lo` and not at `hi`.
    fn bisect(&self, mut lo: f64, mut hi: f64, from: usize, tol: f64) -> Result<f64> {
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.best(mid)? == from {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Sweeps `param` over `grid_size` evenly spaced points, endpoints
/// included.
///
/// Probability parameters default to `[0, 1]` and siblings are
/// renormalized at every point. Utility parameters need an explicit
/// `range`. Crossings are refined by bisection on the identity of the
/// preferred alternative between adjacent grid points; with more than one
/// change inside a cell each is located in turn.
pub fn sweep(
    model: &DecisionModel,
    param: &ParamRef,
    grid_size: usize,
    range: Option<(f64, f64)>,
) -> Result<SweepResult> {
    model.check()?;
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be at least 2, got {grid_size}"
        )));
    }
    let param = model.canonicalize(param)?;
    let slot = model.resolve(&param)?;
    let (lo, hi) = match (range, param.is_probability()) {
        (Some((lo, hi)), true) if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) => {
            return Err(Error::InvalidArgument(format!(
                "probability range [{lo}, {hi}] leaves [0, 1]"
            )))
        }
        (Some(r), _) => r,
        (None, true) => (0.0, 1.0),
        (None, false) => {
            return Err(Error::InvalidArgument(format!(
                "sweeping {param} needs an explicit range"
            )));
        }
    };
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("invalid sweep range [{lo}, {hi}]")));
    }

    let probe = Probe {
        ev: Evaluator::new(model)?,
        slot,
        param: &param,
    };
    let baseline_value = probe.ev.current_value(probe.ev.base(), slot);
    let last = (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| {
            if i + 1 == grid_size {
                hi
            } else {
                lo + (hi - lo) * i as f64 / last
            }
        })
        .collect();
    let points: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&x| probe.expected_utilities(x))
        .collect::<Result<_>>()?;

    let tol = CROSSING_REL_TOL * (hi - lo).max(1.0);
    let mut crossings = Vec::new();
    for i in 0..grid_size - 1 {
        let mut from = choose(&points[i]).0;
        let to = choose(&points[i + 1]).0;
        let mut left = grid[i];
        let right = grid[i + 1];
        let mut guard = 0;
        while from != to && guard < probe.ev.n_alts() {
            let x = probe.bisect(left, right, from, tol)?;
            if x > lo && x < hi && crossings.last().is_none_or(|&c: &f64| x - c > tol) {
                crossings.push(x);
            }
            left = (x + tol).min(right);
            from = probe.best(left)?;
            guard += 1;
        }
    }

    let series = model
        .decision()
        .alternatives()
        .iter()
        .enumerate()
        .map(|(a, name)| Series {
            alternative: name.clone(),
            expected_utility: points.iter().map(|p| p[a]).collect(),
        })
        .collect();
    Ok(SweepResult {
        param,
        range: (lo, hi),
        grid,
        series,
        crossings,
        baseline_value,
    })
}

/// Renders the data behind a sensitivity plot. CSV has the header
/// `param_value,<alternative>,...` and one row per grid point; JSON is the
/// whole result. Numbers are written in shortest round-trip form.
pub fn emit_plot_data(result: &SweepResult, format: PlotFormat) -> Result<Vec<u8>> {
    match format {
        PlotFormat::Json => Ok(serde_json::to_vec_pretty(result)?),
        PlotFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let header = std::iter::once("param_value").chain(result.series.iter().map(|s| s.alternative.as_str()));
            writer.write_record(header)?;
            for (i, x) in result.grid.iter().enumerate() {
                let row = std::iter::once(x.to_string())
                    .chain(result.series.iter().map(|s| s.expected_utility[i].to_string()));
                writer.write_record(row)?;
            }
            writer.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}
