//! Contracts of the sweep runners and the CSV output, on shrunken designs.

use matdecomp::reg::RegularizerKind;
use matdecomp::solver::{solve_composite, ProblemInstance};
use matdecomp::tuning::{self, NoiseModel, RateModel};
use matdecomp::{decomposition_error, DenseMatrix, ObservationOperator};
use matdecomp_bench::checks::{self, failure_identity_gap, paired_ratios};
use matdecomp_bench::instance::{self, diagnostics};
use matdecomp_bench::output::{csv_string, emit_csv};
use matdecomp_bench::sweep::{self, failure_truth, row_manifest, run_badpair_outcomes};
use matdecomp_bench::{Experiment, ResultRow, SweepSpec, CSV_HEADER};
use matdecomp::synth::RngSeed;

fn small(experiment: Experiment) -> SweepSpec {
    let mut spec = SweepSpec::defaults(experiment);
    spec.record_timing = false;
    spec.trials = 2;
    let st = &mut spec.settings;
    match experiment {
        Experiment::RankSweep => {
            st.d = 16;
            st.sparsity = 20;
            spec.grid = vec![0.125, 0.25];
        }
        Experiment::SparsitySweep => {
            st.d = 16;
            st.rank = 2;
            spec.grid = vec![0.0, 0.05, 0.1];
        }
        Experiment::DimensionSweep => {
            st.ranks = vec![1, 2];
            spec.grid = (0..9).map(|k| 12.0 + 2.0 * k as f64).collect();
            spec.trials = 1;
        }
        Experiment::TwostepCompare => {
            st.rank = 2;
            st.sparsity = 20;
            spec.grid = vec![16.0];
            spec.trials = 4;
        }
        Experiment::TwostepFailure => {
            st.sparsity = 10;
            spec.grid = vec![16.0];
        }
        Experiment::BadpairCheck => {
            st.cases = vec![(12, 3), (16, 5)];
            spec.grid = vec![12.0, 16.0];
            spec.trials = 1;
        }
        Experiment::RateBand => {
            st.cases = vec![(1, 10), (2, 20)];
            spec.grid = vec![12.0, 16.0];
            spec.trials = 1;
        }
    }
    spec
}

#[test]
fn row_counts_follow_the_design() {
    let cases = [
        (Experiment::RankSweep, 2 * 2),
        (Experiment::SparsitySweep, 3 * 2),
        (Experiment::DimensionSweep, 9 * 2),
        (Experiment::TwostepCompare, 4 * 2),
        (Experiment::TwostepFailure, 2 * 2),
        (Experiment::BadpairCheck, 2 * 2),
        (Experiment::RateBand, 2 * 2),
    ];
    for (experiment, expected) in cases {
        let rows = sweep::run(&small(experiment)).unwrap();
        assert_eq!(rows.len(), expected, "{experiment}");
        assert!(rows.iter().all(|r| r.experiment == experiment && r.e_squared >= 0.0));
    }
}

#[test]
fn default_designs_have_the_documented_sizes() {
    let rank = SweepSpec::defaults(Experiment::RankSweep);
    assert_eq!(rank.grid.len() * rank.trials, 50);
    assert_eq!(rank.grid, (1..=10).map(|k| k as f64 / 20.0).collect::<Vec<_>>());
    assert_eq!(rank.settings.sparsity, 2171);
    let sparsity = SweepSpec::defaults(Experiment::SparsitySweep);
    assert_eq!(sparsity.grid.len() * sparsity.trials, 50);
    assert_eq!(sparsity.grid.first(), Some(&0.01));
    assert_eq!(sparsity.grid.last(), Some(&0.1));
    let dim = SweepSpec::defaults(Experiment::DimensionSweep);
    assert_eq!(dim.grid.len() * dim.settings.ranks.len(), 18);
    assert_eq!(SweepSpec::defaults(Experiment::TwostepCompare).trials, 20);
    assert_eq!(SweepSpec::defaults(Experiment::TwostepFailure).trials, 20);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = small(Experiment::RankSweep);
    spec.grid.clear();
    assert!(sweep::run(&spec).is_err());
    let mut spec = small(Experiment::RankSweep);
    spec.trials = 0;
    assert!(sweep::run(&spec).is_err());
    let spec = small(Experiment::RankSweep);
    assert!(sweep::run_sparsity_sweep(&spec).is_err());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(Experiment::TwostepCompare);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_csv(&sweep::run(&spec).unwrap(), &a).unwrap();
    emit_csv(&sweep::run(&spec).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn thread_count_does_not_change_rows() {
    let spec = small(Experiment::RateBand);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sweep::run(&spec).unwrap());
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| sweep::run(&spec).unwrap());
    assert_eq!(one, many);
}

#[test]
fn csv_shape() {
    let empty = csv_string(&[]).unwrap();
    assert_eq!(empty, format!("{}\r\n", CSV_HEADER.join(",")));

    let rows: Vec<ResultRow> = sweep::run(&small(Experiment::BadpairCheck)).unwrap().into_iter().take(3).collect();
    let text = csv_string(&rows).unwrap();
    assert_eq!(text.lines().count(), 4);

    let mut mixed = rows.clone();
    mixed[0].experiment = Experiment::RankSweep;
    assert!(csv_string(&mixed).is_err());
}

#[test]
fn csv_values_parse_back() {
    let rows = sweep::run(&small(Experiment::SparsitySweep)).unwrap();
    let text = csv_string(&rows).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);
    let e_col = CSV_HEADER.iter().position(|h| *h == "e_squared").unwrap();
    for (rec, row) in reader.records().zip(&rows) {
        let e: f64 = rec.unwrap()[e_col].parse().unwrap();
        assert!((e - row.e_squared).abs() <= 1e-11 * row.e_squared.max(1e-300));
    }
}

/// Solving the instance named by a row's manifest, saving the estimate and
/// reading it back reproduces the row's error exactly.
#[test]
fn e_squared_round_trips_through_saved_estimates() {
    let spec = small(Experiment::RankSweep);
    let rows = sweep::run(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (k, row) in rows.iter().enumerate() {
        let manifest = row_manifest(&spec, row);
        let (_, y) = manifest.generate().unwrap();
        let params = manifest.default_params(false).unwrap();
        let inst = ProblemInstance::new(y, ObservationOperator::identity(row.d1, row.d2), row.kind, params, None).unwrap();
        let est = solve_composite(&inst, &spec.settings.solver).unwrap();
        let path = dir.path().join(k.to_string());
        instance::write_estimate(&path, &est, &diagnostics(&est, &params, "convex")).unwrap();
        std::fs::write(path.join(instance::MANIFEST_FILE), manifest.to_record().to_string()).unwrap();

        let manifest = instance::read_manifest(&path).unwrap();
        let truth = manifest.truth().unwrap();
        let (theta, gamma) = instance::read_estimate(&path).unwrap();
        let e2 = decomposition_error(&theta, &gamma, &truth.theta_star, &truth.gamma_star).unwrap();
        assert_eq!(e2, row.e_squared);
    }
}

#[test]
fn predicted_rate_matches_the_rate_model() {
    let spec = small(Experiment::SparsitySweep);
    let nu = spec.nu();
    for row in sweep::run(&spec).unwrap() {
        let rate = tuning::corollary_rate(&RateModel::SparseGaussian {
            nu,
            d1: row.d1,
            d2: row.d2,
            r: row.r,
            s: row.s,
            alpha: row.alpha,
        });
        assert_eq!(row.predicted_rate, rate);
    }
    let spec = small(Experiment::DimensionSweep);
    for row in sweep::run(&spec).unwrap() {
        let rate = tuning::corollary_rate(&RateModel::ColGaussian {
            nu: spec.nu(),
            d1: row.d1,
            d2: row.d2,
            r: row.r,
            s: row.s,
            alpha: row.alpha,
        });
        assert_eq!(row.predicted_rate, rate);
        assert_eq!(row.s, 3 * row.r);
    }
}

#[test]
fn noiseless_sparse_free_point_is_nearly_exact() {
    let mut spec = small(Experiment::RankSweep);
    spec.noise = NoiseModel::None;
    spec.settings.sparsity = 0;
    spec.grid = vec![0.125];
    for row in sweep::run(&spec).unwrap() {
        let bound = 4.0 * row.alpha * row.alpha * row.r as f64 / (row.d1 * row.d2) as f64;
        assert!(row.e_squared <= bound, "e2 {} vs {bound}", row.e_squared);
    }
}

#[test]
fn zero_sparsity_endpoint_is_allowed() {
    let rows = sweep::run(&small(Experiment::SparsitySweep)).unwrap();
    assert!(rows.iter().any(|r| r.grid_value == 0.0 && r.s == 0));
}

#[test]
fn paired_rows_share_their_instance_and_echo_the_rule() {
    let spec = small(Experiment::TwostepCompare);
    let rows = sweep::run(&spec).unwrap();
    let rule = tuning::params_sparse_gaussian(spec.nu(), 16, 16, spec.settings.alpha).unwrap();
    for pair in rows.chunks(2) {
        assert_eq!((pair[0].estimator, pair[1].estimator), ("convex", "twostep"));
        assert_eq!(pair[0].seed, pair[1].seed);
        for row in pair {
            assert_eq!((row.lambda, row.mu), (rule.lambda, rule.mu));
        }
    }
    assert_eq!(paired_ratios(&rows).len(), 4);
}

#[test]
fn failure_truth_and_identity() {
    let d = 16;
    let truth = failure_truth(d, 5, 1.0, RngSeed(1)).unwrap();
    assert!(truth.theta_star.as_slice().iter().all(|&x| x == 1.0 / d as f64));
    assert_eq!(truth.theta_star.max_abs(), 1.0 / d as f64);
    for d in [4, 16, 100] {
        assert!(failure_identity_gap(d).unwrap() <= 1e-10);
    }
    let rows = sweep::run(&small(Experiment::TwostepFailure)).unwrap();
    let check = checks::check_twostep_failure(&rows).unwrap();
    assert!(check.detail.contains("identity gap"));
}

/// A zero output sits at `2 alpha^2 s / (d1 d2)` from the pair; for any output
/// the larger of the two errors clears a quarter of the radius, while the
/// smaller one can be as low as zero.
#[test]
fn bad_pair_radius_and_parallelogram_floor() {
    let spec = small(Experiment::BadpairCheck);
    let outcomes = run_badpair_outcomes(&spec).unwrap();
    for o in &outcomes {
        assert!(o.e_vs_zero <= 1e-20);
        assert!((o.e_vs_pair - 2.0 * o.radius).abs() <= 1e-12 * o.radius);
    }

    let alpha = spec.settings.alpha;
    for kind in [RegularizerKind::ElementwiseL1, RegularizerKind::Columnwise21] {
        let (d, s) = (16, 5);
        let truth = matdecomp::synth::bad_pair(kind, d, d, s, alpha).unwrap();
        let radius = truth.theta_star.frobenius_norm_sq();
        let mut rng = RngSeed(9).rng();
        for k in 0..50 {
            use rand::Rng;
            let w: f64 = k as f64 / 49.0;
            let jitter = |rng: &mut rand_chacha::ChaCha20Rng| {
                DenseMatrix::from_fn(d, d, |_, _| 0.1 * radius.sqrt() * rng.gen_range(-1.0..1.0) / d as f64)
            };
            let theta = &truth.theta_star.scale(w) + &jitter(&mut rng);
            let gamma = &truth.gamma_star.scale(w) + &jitter(&mut rng);
            let zero = DenseMatrix::zeros(d, d);
            let a = decomposition_error(&theta, &gamma, &truth.theta_star, &truth.gamma_star).unwrap();
            let b = decomposition_error(&theta, &gamma, &zero, &zero).unwrap();
            assert!(a.max(b) >= 0.25 * radius);
        }
    }
}
