//! Pass/fail evaluation of sweep results against their acceptance thresholds.

use std::collections::BTreeMap;
use std::fmt;

use matdecomp::synth::{self, RngSeed};
use matdecomp::{DenseMatrix, ObservationOperator, Result};

use crate::fit::{group_means, median, ols, LinearFit};
use crate::sweep::{self, failure_truth, run_badpair_outcomes, BadPairOutcome, Experiment, ResultRow, SweepSpec};

pub const RANK_R2_MIN: f64 = 0.9;
pub const SPARSITY_R2_MIN: f64 = 0.85;
pub const DIMENSION_R2_MIN: f64 = 0.9;
pub const SLOPE_RATIO_BAND: (f64, f64) = (1.2, 1.8);
pub const TWOSTEP_RATIO_BAND: (f64, f64) = (1.0 / 3.0, 3.0);
pub const FAILURE_RATIO_MIN: f64 = 2.0;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const RATE_SPREAD_MAX: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

fn convex(rows: &[ResultRow]) -> Vec<&ResultRow> {
    rows.iter().filter(|r| r.estimator == "convex").collect()
}

fn fit_means(rows: &[&ResultRow], value: impl Fn(&ResultRow) -> f64) -> Option<LinearFit> {
    let means = group_means(rows, |r| r.grid_value, |r| value(r));
    let (x, y): (Vec<f64>, Vec<f64>) = means.into_iter().unzip();
    ols(&x, &y)
}

fn linear_growth(name: &str, rows: &[ResultRow], r2_min: f64) -> CheckOutcome {
    match fit_means(&convex(rows), |r| r.e_squared) {
        Some(fit) => CheckOutcome::new(
            name,
            fit.r_squared >= r2_min && fit.slope > 0.0,
            format!("slope {:.4}, R^2 {:.4} (need >= {r2_min}, slope > 0)", fit.slope, fit.r_squared),
        ),
        None => CheckOutcome::new(name, false, "fewer than two grid points".into()),
    }
}

/// Mean e² grows linearly in the rank fraction.
pub fn check_rank_sweep(rows: &[ResultRow]) -> CheckOutcome {
    linear_growth("rank sweep linear in gamma", rows, RANK_R2_MIN)
}

/// Mean e² grows linearly in the sparsity fraction.
pub fn check_sparsity_sweep(rows: &[ResultRow]) -> CheckOutcome {
    linear_growth("sparsity sweep linear in beta", rows, SPARSITY_R2_MIN)
}

/// Mean `1/e²` is linear in `d` for every rank, and the slope of the smaller
/// rank exceeds that of the larger one by a factor in [`SLOPE_RATIO_BAND`].
pub fn check_dimension_sweep(rows: &[ResultRow]) -> CheckOutcome {
    let name = "dimension sweep 1/e^2 linear in d";
    let mut by_rank: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for row in convex(rows) {
        by_rank.entry(row.r).or_default().push(row);
    }
    let mut fits = Vec::new();
    let mut parts = Vec::new();
    let mut passed = true;
    for (r, group) in &by_rank {
        match fit_means(group, ResultRow::inv_e_squared) {
            Some(fit) => {
                passed &= fit.r_squared >= DIMENSION_R2_MIN;
                parts.push(format!("r={r}: slope {:.4e}, R^2 {:.4}", fit.slope, fit.r_squared));
                fits.push((*r, fit));
            }
            None => {
                passed = false;
                parts.push(format!("r={r}: fewer than two dimensions"));
            }
        }
    }
    if fits.len() >= 2 {
        let (lo, hi) = (fits[0].1, fits[fits.len() - 1].1);
        let ratio = lo.slope / hi.slope;
        passed &= (SLOPE_RATIO_BAND.0..=SLOPE_RATIO_BAND.1).contains(&ratio);
        parts.push(format!(
            "slope ratio r={}/r={} {ratio:.3} (need [{}, {}])",
            fits[0].0,
            fits[fits.len() - 1].0,
            SLOPE_RATIO_BAND.0,
            SLOPE_RATIO_BAND.1
        ));
    } else {
        passed = false;
        parts.push("need two ranks for the slope ratio".into());
    }
    CheckOutcome::new(name, passed, parts.join("; "))
}

/// `e²(twostep) / e²(convex)` per paired instance.
pub fn paired_ratios(rows: &[ResultRow]) -> Vec<f64> {
    let mut pairs: BTreeMap<(u64, usize), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for row in rows {
        let e = pairs.entry((row.grid_value.to_bits(), row.trial)).or_default();
        match row.estimator {
            "convex" => e.0 = Some(row.e_squared),
            "twostep" => e.1 = Some(row.e_squared),
            _ => {}
        }
    }
    pairs
        .into_values()
        .filter_map(|p| match p {
            (Some(c), Some(t)) => Some(t / c),
            _ => None,
        })
        .collect()
}

pub fn check_twostep_compare(rows: &[ResultRow]) -> CheckOutcome {
    let name = "two-step comparable to convex";
    let ratios = paired_ratios(rows);
    if ratios.is_empty() {
        return CheckOutcome::new(name, false, "no paired rows".into());
    }
    let m = median(&ratios);
    let (lo, hi) = TWOSTEP_RATIO_BAND;
    CheckOutcome::new(
        name,
        (lo..=hi).contains(&m),
        format!("median ratio {m:.4} over {} pairs (need [{lo:.4}, {hi}])", ratios.len()),
    )
}

/// `|‖X(theta*)‖_∞ − (1 + √d) ‖theta*‖_∞|` for the failure design.
pub fn failure_identity_gap(d: usize) -> Result<f64> {
    let design = synth::gen_twostep_failure_design(d)?;
    let op = ObservationOperator::multitask(design, d)?;
    let truth = failure_truth(d, 0, 1.0, RngSeed(0))?;
    let image = op.apply(&truth.theta_star, &DenseMatrix::zeros(d, d))?;
    let expected = (1.0 + (d as f64).sqrt()) * truth.theta_star.max_abs();
    Ok((image.max_abs() - expected).abs())
}

pub fn check_twostep_failure(rows: &[ResultRow]) -> Result<CheckOutcome> {
    let name = "two-step fails on the failure design";
    let ratios = paired_ratios(rows);
    if ratios.is_empty() {
        return Ok(CheckOutcome::new(name, false, "no paired rows".into()));
    }
    let m = median(&ratios);
    let mut dims: Vec<usize> = rows.iter().map(|r| r.d1).collect();
    dims.sort_unstable();
    dims.dedup();
    let mut gap: f64 = 0.0;
    for d in dims {
        gap = gap.max(failure_identity_gap(d)?);
    }
    Ok(CheckOutcome::new(
        name,
        m >= FAILURE_RATIO_MIN && gap <= IDENTITY_TOL,
        format!(
            "median ratio {m:.4} over {} pairs (need >= {FAILURE_RATIO_MIN}); sup-norm identity gap {gap:.2e} (need <= {IDENTITY_TOL:e})",
            ratios.len()
        ),
    ))
}

/// Each output must sit at least a quarter radius away from both
/// indistinguishable truths, i.e. the `min` of the two errors is tested.
/// The `max` is reported alongside.
pub fn check_badpair(outcomes: &[BadPairOutcome]) -> CheckOutcome {
    let name = "bad-pair error floor";
    if outcomes.is_empty() {
        return CheckOutcome::new(name, false, "no outcomes".into());
    }
    let mut passed = true;
    let parts: Vec<String> = outcomes
        .iter()
        .map(|o| {
            let floor = 0.25 * o.radius;
            let lo = o.e_vs_pair.min(o.e_vs_zero);
            let hi = o.e_vs_pair.max(o.e_vs_zero);
            passed &= lo >= floor;
            format!(
                "{} d={} s={}: min {lo:.4e}, max {hi:.4e}, floor {floor:.4e}",
                o.row.kind.name(),
                o.row.d1,
                o.row.s
            )
        })
        .collect();
    CheckOutcome::new(name, passed, parts.join("; "))
}

/// Spread `max/min` over grid cells of `mean e² / predicted_rate`.
pub fn rate_spread(rows: &[ResultRow]) -> Option<(f64, f64, f64)> {
    let mut cells: BTreeMap<(u64, usize, usize), (f64, f64, usize)> = BTreeMap::new();
    for row in convex(rows) {
        let e = cells.entry((row.grid_value.to_bits(), row.r, row.s)).or_insert((0.0, row.predicted_rate, 0));
        e.0 += row.e_squared;
        e.2 += 1;
    }
    let ratios: Vec<f64> = cells.into_values().map(|(sum, rate, n)| sum / n as f64 / rate).collect();
    let lo = ratios.iter().copied().reduce(f64::min)?;
    let hi = ratios.iter().copied().reduce(f64::max)?;
    Some((lo, hi, hi / lo))
}

pub fn check_rate_band(rows: &[ResultRow]) -> CheckOutcome {
    let name = "error tracks the predicted rate";
    match rate_spread(rows) {
        Some((lo, hi, spread)) => CheckOutcome::new(
            name,
            spread.is_finite() && spread <= RATE_SPREAD_MAX,
            format!("e^2/rate in [{lo:.3}, {hi:.3}], spread {spread:.3} (need <= {RATE_SPREAD_MAX})"),
        ),
        None => CheckOutcome::new(name, false, "no rows".into()),
    }
}

/// Runs a sweep and evaluates it against its acceptance check.
pub fn run_checked(spec: &SweepSpec) -> Result<(Vec<ResultRow>, CheckOutcome)> {
    if spec.experiment == Experiment::BadpairCheck {
        let outcomes = run_badpair_outcomes(spec)?;
        let check = check_badpair(&outcomes);
        return Ok((outcomes.into_iter().map(|o| o.row).collect(), check));
    }
    let rows = sweep::run(spec)?;
    let check = match spec.experiment {
        Experiment::RankSweep => check_rank_sweep(&rows),
        Experiment::SparsitySweep => check_sparsity_sweep(&rows),
        Experiment::DimensionSweep => check_dimension_sweep(&rows),
        Experiment::TwostepCompare => check_twostep_compare(&rows),
        Experiment::TwostepFailure => check_twostep_failure(&rows)?,
        Experiment::RateBand => check_rate_band(&rows),
        Experiment::BadpairCheck => unreachable!("handled above"),
    };
    Ok((rows, check))
}
