//! Monte-Carlo sweeps over synthetic instances.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use matdecomp::obsop::design_stats;
use matdecomp::reg::{self, PenaltyParams, RegularizerKind};
use matdecomp::solver::{solve_composite, two_step, two_step_unchecked, DecompositionEstimate, ProblemInstance, SolverConfig};
use matdecomp::synth::{self, noise_seed, GroundTruth, RngSeed};
use matdecomp::tuning::{self, NoiseModel, RateModel};
use matdecomp::{decomposition_error, DenseMatrix, Error, ObservationOperator, Result};
use rayon::prelude::*;

use crate::instance::Manifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    RankSweep,
    SparsitySweep,
    DimensionSweep,
    TwostepCompare,
    TwostepFailure,
    BadpairCheck,
    RateBand,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Self::RankSweep,
        Self::SparsitySweep,
        Self::DimensionSweep,
        Self::TwostepCompare,
        Self::TwostepFailure,
        Self::BadpairCheck,
        Self::RateBand,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::RankSweep => "rank_sweep",
            Self::SparsitySweep => "sparsity_sweep",
            Self::DimensionSweep => "dimension_sweep",
            Self::TwostepCompare => "twostep_compare",
            Self::TwostepFailure => "twostep_failure",
            Self::BadpairCheck => "badpair_check",
            Self::RateBand => "rate_band",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "experiment",
                reason: format!("unknown `{s}`"),
            })
    }
}

/// Instance-level knobs shared by the experiments. Which fields matter depends on the experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub d: usize,
    pub rank: usize,
    pub sparsity: usize,
    /// Ranks of the dimension sweep.
    pub ranks: Vec<usize>,
    /// `(d, s)` per bad-pair case, or `(r, s)` per rate-band setting.
    pub cases: Vec<(usize, usize)>,
    pub alpha: f64,
    /// Sparse entries are uniform on `[-magnitude, magnitude]`.
    pub magnitude: f64,
    /// Use the printed columnwise `mu` instead of the noise-scaled one.
    pub paper_literal: bool,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub base_seed: RngSeed,
    pub noise: NoiseModel,
    pub output_path: Option<PathBuf>,
    pub settings: Settings,
    /// When false, `wall_time_ms` is written as 0 so reruns are byte-identical.
    pub record_timing: bool,
}

pub const DEFAULT_TRIALS: usize = 5;
pub const DEFAULT_SEED: u64 = 20_120_501;

/// `k / den` for `k` in `lo..=hi`; dividing last keeps grid values exact decimals.
fn ratio_grid(lo: u32, hi: u32, den: f64) -> Vec<f64> {
    (lo..=hi).map(|k| f64::from(k) / den).collect()
}

impl SweepSpec {
    /// Default experiment design.
    pub fn defaults(experiment: Experiment) -> Self {
        let solver = SolverConfig::default();
        let mut settings = Settings {
            d: 100,
            rank: 10,
            sparsity: 2171,
            ranks: vec![10, 15],
            cases: Vec::new(),
            alpha: DEFAULT_ALPHA,
            magnitude: 1.0,
            paper_literal: false,
            solver,
        };
        let mut trials = DEFAULT_TRIALS;
        let mut nu = 1.0;
        let grid = match experiment {
            Experiment::RankSweep => ratio_grid(1, 10, 20.0),
            Experiment::SparsitySweep => ratio_grid(1, 10, 100.0),
            Experiment::DimensionSweep => (0..9).map(|k| 100.0 + 25.0 * k as f64).collect(),
            Experiment::TwostepCompare => {
                settings.rank = 5;
                settings.sparsity = 180;
                trials = 20;
                vec![60.0]
            }
            Experiment::TwostepFailure => {
                settings.sparsity = FAILURE_SPARSITY;
                settings.alpha = FAILURE_ALPHA;
                nu = FAILURE_NU;
                trials = 20;
                vec![100.0]
            }
            Experiment::BadpairCheck => {
                settings.cases = vec![(50, 10), (100, 30)];
                trials = 1;
                vec![50.0, 100.0]
            }
            Experiment::RateBand => {
                settings.cases = RATE_BAND_CASES.to_vec();
                vec![60.0, 100.0, 140.0]
            }
        };
        let noise = if nu > 0.0 {
            NoiseModel::Gaussian { nu }
        } else {
            NoiseModel::None
        };
        Self {
            experiment,
            grid,
            trials,
            base_seed: RngSeed(DEFAULT_SEED),
            noise,
            output_path: None,
            settings,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidParameter {
                name: "sweep",
                reason: reason.to_owned(),
            })
        };
        if self.grid.is_empty() {
            return bad("grid must be nonempty");
        }
        if self.grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return bad("grid values must be finite and nonnegative");
        }
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if matches!(self.experiment, Experiment::BadpairCheck) && self.settings.cases.len() != self.grid.len() {
            return bad("bad-pair grid needs one (d, s) case per grid value");
        }
        if matches!(self.experiment, Experiment::RateBand) && self.settings.cases.is_empty() {
            return bad("rate band needs at least one (r, s) case");
        }
        if matches!(self.experiment, Experiment::DimensionSweep) && self.settings.ranks.is_empty() {
            return bad("dimension sweep needs at least one rank");
        }
        self.noise.validate()?;
        self.settings.solver.validate()
    }

    pub fn nu(&self) -> f64 {
        match self.noise {
            NoiseModel::Gaussian { nu } => nu,
            _ => 0.0,
        }
    }
}

/// Default spikiness radius of the experiments.
pub const DEFAULT_ALPHA: f64 = 4.0;
/// Noise level of the two-step failure experiment.
pub const FAILURE_NU: f64 = 0.1;
/// Spikiness radius of the failure experiment: exactly the spikiness of `11^T / d`.
pub const FAILURE_ALPHA: f64 = 1.0;
/// Nonzeros of the sparse component in the two-step failure experiment.
pub const FAILURE_SPARSITY: usize = 100;
/// `(r, s)` settings of the rate-band experiment.
pub const RATE_BAND_CASES: [(usize, usize); 3] = [(2, 100), (4, 250), (8, 500)];

/// One solved trial. Column order of the CSV follows the field order, with
/// `inv_e_squared` appended last.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub grid_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub d1: usize,
    pub d2: usize,
    pub r: usize,
    pub s: usize,
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub e_squared: f64,
    pub predicted_rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
    /// `convex` or `twostep`.
    pub estimator: &'static str,
    pub kind: RegularizerKind,
}

impl ResultRow {
    pub fn inv_e_squared(&self) -> f64 {
        1.0 / self.e_squared
    }
}

/// Seed of one trial; `path` identifies grid point, sub-case and trial.
pub fn trial_seed(base: RngSeed, path: &[usize]) -> RngSeed {
    path.iter().fold(base, |s, &k| s.derive(k as u64))
}

struct Timed<T> {
    value: T,
    ms: f64,
}

fn timed<T>(record: bool, f: impl FnOnce() -> Result<T>) -> Result<Timed<T>> {
    let start = Instant::now();
    let value = f()?;
    let ms = if record { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok(Timed { value, ms })
}

/// Fields of a row that are known before solving.
struct RowStub {
    experiment: Experiment,
    grid_value: f64,
    trial: usize,
    seed: RngSeed,
    r: usize,
    s: usize,
    kind: RegularizerKind,
    predicted_rate: f64,
}

impl RowStub {
    fn finish(&self, estimator: &'static str, params: &PenaltyParams, est: &Timed<DecompositionEstimate>, e_squared: f64) -> ResultRow {
        let (d1, d2) = est.value.theta_hat.dims();
        ResultRow {
            experiment: self.experiment,
            grid_value: self.grid_value,
            trial: self.trial,
            seed: self.seed.0,
            d1,
            d2,
            r: self.r,
            s: self.s,
            lambda: params.lambda,
            mu: params.mu,
            alpha: params.alpha,
            e_squared,
            predicted_rate: self.predicted_rate,
            iterations: est.value.iterations,
            converged: est.value.converged,
            wall_time_ms: est.ms,
            estimator,
            kind: self.kind,
        }
    }
}

fn truth_error(est: &DecompositionEstimate, truth: &GroundTruth) -> Result<f64> {
    decomposition_error(&est.theta_hat, &est.gamma_hat, &truth.theta_star, &truth.gamma_star)
}

/// Manifest of the identity-operator instance behind a row.
pub fn row_manifest(spec: &SweepSpec, row: &ResultRow) -> Manifest {
    Manifest {
        kind: row.kind,
        d1: row.d1,
        d2: row.d2,
        r: row.r,
        s: row.s,
        alpha: spec.settings.alpha,
        magnitude: spec.settings.magnitude,
        nu: spec.nu(),
        seed: RngSeed(row.seed),
    }
}

fn stub_manifest(spec: &SweepSpec, stub: &RowStub, d: usize) -> Manifest {
    Manifest {
        kind: stub.kind,
        d1: d,
        d2: d,
        r: stub.r,
        s: stub.s,
        alpha: spec.settings.alpha,
        magnitude: spec.settings.magnitude,
        nu: spec.nu(),
        seed: stub.seed,
    }
}

fn sparse_rate(nu: f64, d1: usize, d2: usize, r: usize, s: usize, alpha: f64) -> f64 {
    tuning::corollary_rate(&RateModel::SparseGaussian { nu, d1, d2, r, s, alpha })
}

fn col_rate(nu: f64, d1: usize, d2: usize, r: usize, s: usize, alpha: f64) -> f64 {
    tuning::corollary_rate(&RateModel::ColGaussian { nu, d1, d2, r, s, alpha })
}

/// Solves one elementwise-sparse identity instance with the Gaussian-noise rule.
fn sparse_identity_trial(spec: &SweepSpec, stub: RowStub, d: usize) -> Result<Vec<ResultRow>> {
    let st = &spec.settings;
    let nu = spec.nu();
    let kind = RegularizerKind::ElementwiseL1;
    let (truth, y) = stub_manifest(spec, &stub, d).generate()?;
    let params = tuning::params_sparse_gaussian(nu, d, d, st.alpha)?;
    let inst = ProblemInstance::new(y, ObservationOperator::identity(d, d), kind, params, None)?;
    let est = timed(spec.record_timing, || solve_composite(&inst, &st.solver))?;
    let e2 = truth_error(&est.value, &truth)?;
    let mut rows = vec![stub.finish("convex", &params, &est, e2)];
    if spec.experiment == Experiment::TwostepCompare {
        let ts = timed(spec.record_timing, || two_step(&inst.op, &inst.y, params.lambda, params.mu))?;
        let e2 = truth_error(&ts.value, &truth)?;
        rows.push(stub.finish("twostep", &params, &ts, e2));
    }
    Ok(rows)
}

fn grid_usize(v: f64) -> usize {
    v.round() as usize
}

pub fn run_rank_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    expect(spec, Experiment::RankSweep)?;
    let d = spec.settings.d;
    let nu = spec.nu();
    let jobs = jobs2(spec.grid.len(), 1, spec.trials);
    collect(jobs.into_par_iter().map(|(g, _, t)| {
        let gamma = spec.grid[g];
        let r = ((gamma * d as f64).round() as usize).min(d);
        let s = spec.settings.sparsity;
        let stub = RowStub {
            experiment: spec.experiment,
            grid_value: gamma,
            trial: t,
            seed: trial_seed(spec.base_seed, &[g, t]),
            r,
            s,
            kind: RegularizerKind::ElementwiseL1,
            predicted_rate: sparse_rate(nu, d, d, r, s, spec.settings.alpha),
        };
        sparse_identity_trial(spec, stub, d)
    }))
}

pub fn run_sparsity_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    expect(spec, Experiment::SparsitySweep)?;
    let d = spec.settings.d;
    let nu = spec.nu();
    let jobs = jobs2(spec.grid.len(), 1, spec.trials);
    collect(jobs.into_par_iter().map(|(g, _, t)| {
        let beta = spec.grid[g];
        let s = ((beta * (d * d) as f64).round() as usize).min(d * d);
        let r = spec.settings.rank;
        let stub = RowStub {
            experiment: spec.experiment,
            grid_value: beta,
            trial: t,
            seed: trial_seed(spec.base_seed, &[g, t]),
            r,
            s,
            kind: RegularizerKind::ElementwiseL1,
            predicted_rate: sparse_rate(nu, d, d, r, s, spec.settings.alpha),
        };
        sparse_identity_trial(spec, stub, d)
    }))
}

pub fn run_dimension_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    expect(spec, Experiment::DimensionSweep)?;
    let st = &spec.settings;
    let nu = spec.nu();
    let kind = RegularizerKind::Columnwise21;
    let jobs = jobs2(spec.grid.len(), st.ranks.len(), spec.trials);
    collect(jobs.into_par_iter().map(|(g, k, t)| {
        let d = grid_usize(spec.grid[g]);
        let r = st.ranks[k];
        let s = (3 * r).min(d);
        let seed = trial_seed(spec.base_seed, &[g, k, t]);
        let stub = RowStub {
            experiment: spec.experiment,
            grid_value: spec.grid[g],
            trial: t,
            seed,
            r,
            s,
            kind,
            predicted_rate: col_rate(nu, d, d, r, s, st.alpha),
        };
        let (truth, y) = stub_manifest(spec, &stub, d).generate()?;
        let params = tuning::params_col_gaussian(nu, d, d, st.alpha, st.paper_literal)?;
        let inst = ProblemInstance::new(y, ObservationOperator::identity(d, d), kind, params, None)?;
        let est = timed(spec.record_timing, || solve_composite(&inst, &st.solver))?;
        let e2 = truth_error(&est.value, &truth)?;
        Ok(vec![stub.finish("convex", &params, &est, e2)])
    }))
}

pub fn run_twostep_compare(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    expect(spec, Experiment::TwostepCompare)?;
    let nu = spec.nu();
    let jobs = jobs2(spec.grid.len(), 1, spec.trials);
    collect(jobs.into_par_iter().map(|(g, _, t)| {
        let d = grid_usize(spec.grid[g]);
        let (r, s) = (spec.settings.rank, spec.settings.sparsity);
        let stub = RowStub {
            experiment: spec.experiment,
            grid_value: spec.grid[g],
            trial: t,
            seed: trial_seed(spec.base_seed, &[g, t]),
            r,
            s,
            kind: RegularizerKind::ElementwiseL1,
            predicted_rate: sparse_rate(nu, d, d, r, s, spec.settings.alpha),
        };
        sparse_identity_trial(spec, stub, d)
    }))
}

/// Ground truth of the failure experiment: `theta* = 1 1^T / d` and a random sparse `gamma*`.
pub fn failure_truth(d: usize, s: usize, magnitude: f64, seed: RngSeed) -> Result<GroundTruth> {
    let kind = RegularizerKind::ElementwiseL1;
    let theta_star = DenseMatrix::from_fn(d, d, |_, _| 1.0 / d as f64);
    let (gamma_star, support) = synth::gen_sparse(d, d, s, kind, magnitude, seed.derive(2))?;
    Ok(GroundTruth {
        theta_frobenius: theta_star.frobenius_norm(),
        alpha_used: reg::spikiness(kind, &theta_star),
        theta_star,
        gamma_star,
        rank: 1,
        sparsity: s,
        support,
    })
}

pub fn run_twostep_failure(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    expect(spec, Experiment::TwostepFailure)?;
    let st = &spec.settings;
    let nu = spec.nu();
    let kind = RegularizerKind::ElementwiseL1;
    let jobs = jobs2(spec.grid.len(), 1, spec.trials);
    collect(jobs.into_par_iter().map(|(g, _, t)| {
        let d = grid_usize(spec.grid[g]);
        let seed = trial_seed(spec.base_seed, &[g, t]);
        let truth = failure_truth(d, st.sparsity, st.magnitude, seed)?;
        let design = synth::gen_twostep_failure_design(d)?;
        let op = ObservationOperator::multitask(design.clone(), d)?;
        let w = synth::gen_gaussian_noise(d, d, nu, noise_seed(seed))?;
        let y = &op.apply(&truth.theta_star, &truth.gamma_star)? + &w;

        // Entries of W have standard deviation nu / d, which is the noise scale the multitask rule expects.
        let entry_sd = nu / d as f64;
        let stats = design_stats(&design, d)?;
        let convex_params = tuning::params_multitask(entry_sd, &stats, d, d, d, st.alpha)?;
        let naive_params = tuning::params_sparse_gaussian(nu, d, d, st.alpha)?;
        let predicted = tuning::corollary_rate(&RateModel::Multitask {
            nu: entry_sd,
            stats,
            n: d,
            d1: d,
            d2: d,
            r: 1,
            s: st.sparsity,
            alpha: st.alpha,
        });
        let stub = RowStub {
            experiment: spec.experiment,
            grid_value: spec.grid[g],
            trial: t,
            seed,
            r: 1,
            s: st.sparsity,
            kind,
            predicted_rate: predicted,
        };

        let inst = ProblemInstance::new(y, op, kind, convex_params, None)?;
        let est = timed(spec.record_timing, || solve_composite(&inst, &st.solver))?;
        let e2 = truth_error(&est.value, &truth)?;
        let ts = timed(spec.record_timing, || {
            two_step_unchecked(&inst.y, naive_params.lambda, naive_params.mu)
        })?;
        let e2_ts = truth_error(&ts.value, &truth)?;
        Ok(vec![
            stub.finish("convex", &convex_params, &est, e2),
            stub.finish("twostep", &naive_params, &ts, e2_ts),
        ])
    }))
}

/// Bad-pair row together with the error against each of the two indistinguishable truths.
#[derive(Clone, Debug)]
pub struct BadPairOutcome {
    pub row: ResultRow,
    pub e_vs_pair: f64,
    pub e_vs_zero: f64,
    /// Non-identifiability radius: `alpha^2 s / (d1 d2)` for l1, `alpha^2 s / d2` for col21.
    pub radius: f64,
}

pub fn run_badpair_outcomes(spec: &SweepSpec) -> Result<Vec<BadPairOutcome>> {
    expect(spec, Experiment::BadpairCheck)?;
    let st = &spec.settings;
    let kinds = [RegularizerKind::ElementwiseL1, RegularizerKind::Columnwise21];
    let mut jobs = Vec::new();
    for g in 0..spec.grid.len() {
        for k in 0..kinds.len() {
            for t in 0..spec.trials {
                jobs.push((g, k, t));
            }
        }
    }
    let mut out: Vec<BadPairOutcome> = jobs
        .into_par_iter()
        .map(|(g, k, t)| {
            let (d, s) = st.cases[g];
            let kind = kinds[k];
            let truth = synth::bad_pair(kind, d, d, s, st.alpha)?;
            let params = match kind {
                RegularizerKind::ElementwiseL1 => tuning::params_sparse_gaussian(0.0, d, d, st.alpha)?,
                RegularizerKind::Columnwise21 => tuning::params_col_gaussian(0.0, d, d, st.alpha, st.paper_literal)?,
            };
            let radius = match kind {
                RegularizerKind::ElementwiseL1 => sparse_rate(0.0, d, d, 1, s, st.alpha),
                RegularizerKind::Columnwise21 => col_rate(0.0, d, d, 1, s, st.alpha),
            };
            let inst = ProblemInstance::new(DenseMatrix::zeros(d, d), ObservationOperator::identity(d, d), kind, params, None)?;
            let est = timed(spec.record_timing, || solve_composite(&inst, &st.solver))?;
            let e_vs_pair = truth_error(&est.value, &truth)?;
            let zero = DenseMatrix::zeros(d, d);
            let e_vs_zero = decomposition_error(&est.value.theta_hat, &est.value.gamma_hat, &zero, &zero)?;
            let stub = RowStub {
                experiment: spec.experiment,
                grid_value: spec.grid[g],
                trial: t,
                seed: trial_seed(spec.base_seed, &[g, k, t]),
                r: truth.rank,
                s,
                kind,
                predicted_rate: radius,
            };
            Ok(BadPairOutcome {
                row: stub.finish("convex", &params, &est, e_vs_pair.min(e_vs_zero)),
                e_vs_pair,
                e_vs_zero,
                radius,
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| row_order(&a.row, &b.row));
    Ok(out)
}

pub fn run_badpair_check(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    Ok(run_badpair_outcomes(spec)?.into_iter().map(|o| o.row).collect())
}

pub fn run_rate_band(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    expect(spec, Experiment::RateBand)?;
    let nu = spec.nu();
    let cases = &spec.settings.cases;
    let jobs = jobs2(spec.grid.len(), cases.len(), spec.trials);
    collect(jobs.into_par_iter().map(|(g, k, t)| {
        let d = grid_usize(spec.grid[g]);
        let (r, s) = cases[k];
        let stub = RowStub {
            experiment: spec.experiment,
            grid_value: spec.grid[g],
            trial: t,
            seed: trial_seed(spec.base_seed, &[g, k, t]),
            r,
            s,
            kind: RegularizerKind::ElementwiseL1,
            predicted_rate: sparse_rate(nu, d, d, r, s, spec.settings.alpha),
        };
        sparse_identity_trial(spec, stub, d)
    }))
}

/// Runs the experiment named in the spec.
pub fn run(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    match spec.experiment {
        Experiment::RankSweep => run_rank_sweep(spec),
        Experiment::SparsitySweep => run_sparsity_sweep(spec),
        Experiment::DimensionSweep => run_dimension_sweep(spec),
        Experiment::TwostepCompare => run_twostep_compare(spec),
        Experiment::TwostepFailure => run_twostep_failure(spec),
        Experiment::BadpairCheck => run_badpair_check(spec),
        Experiment::RateBand => run_rate_band(spec),
    }
}

fn expect(spec: &SweepSpec, experiment: Experiment) -> Result<()> {
    if spec.experiment != experiment {
        return Err(Error::InvalidParameter {
            name: "experiment",
            reason: format!("spec is for {}, not {experiment}", spec.experiment),
        });
    }
    spec.validate()
}

fn jobs2(grid: usize, cases: usize, trials: usize) -> Vec<(usize, usize, usize)> {
    let mut jobs = Vec::with_capacity(grid * cases * trials);
    for g in 0..grid {
        for k in 0..cases {
            for t in 0..trials {
                jobs.push((g, k, t));
            }
        }
    }
    jobs
}

fn collect(results: impl ParallelIterator<Item = Result<Vec<ResultRow>>>) -> Result<Vec<ResultRow>> {
    let nested: Vec<Vec<ResultRow>> = results.collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = nested.into_iter().flatten().collect();
    rows.sort_by(row_order);
    Ok(rows)
}

/// Emission order: grid value, rank, sparsity, kind, trial, estimator.
pub fn row_order(a: &ResultRow, b: &ResultRow) -> std::cmp::Ordering {
    a.grid_value
        .total_cmp(&b.grid_value)
        .then(a.r.cmp(&b.r))
        .then(a.s.cmp(&b.s))
        .then(a.kind.name().cmp(b.kind.name()))
        .then(a.trial.cmp(&b.trial))
        .then(a.estimator.cmp(b.estimator))
}
