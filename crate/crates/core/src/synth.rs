//! Seeded generators for synthetic decomposition instances.
//!
//! All randomness comes from ChaCha20 seeded with a 64-bit value. Per-trial
//! seeds are derived with [`derive_seed`]:
//!
//! ```text
//! trial_seed = splitmix64(base_seed ^ (0x9E3779B97F4A7C15 * trial_index))
//! ```
//!
//! (wrapping multiplication), and the components of one instance draw from
//! further derived streams so they are independent of each other.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::matrix::{orthonormal_columns, symmetric_eigen, DenseMatrix};
use crate::reg::{self, RegularizerKind, Support};
use crate::tuning::check_psd;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream identifiers for the parts of one instance.
const STREAM_LOW_RANK: u64 = 1;
const STREAM_SPARSE: u64 = 2;
const STREAM_NOISE: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    pub fn derive(self, index: u64) -> RngSeed {
        derive_seed(self, index)
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: RngSeed, index: u64) -> RngSeed {
    RngSeed(splitmix64(base.0 ^ GOLDEN_GAMMA.wrapping_mul(index)))
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize, sd: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    })
}

/// A low-rank plus sparse ground truth.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub theta_star: DenseMatrix,
    pub gamma_star: DenseMatrix,
    pub rank: usize,
    pub sparsity: usize,
    pub alpha_used: f64,
    /// `||theta_star||_F` after the spikiness adjustment.
    pub theta_frobenius: f64,
    pub support: Support,
}

/// Random rank-`r` matrix with unit Frobenius norm, pulled into the spikiness ball.
///
/// Singular spaces come from QR of Gaussian matrices and singular values are
/// i.i.d. uniform on `[0.5, 1.5]` before normalization. For the columnwise
/// norm the ball projection rescales columns, which keeps the rank. For the
/// elementwise norm, clipping entries would raise the rank, so the whole
/// matrix is scaled down instead.
pub fn gen_low_rank(
    d1: usize,
    d2: usize,
    r: usize,
    alpha: f64,
    kind: RegularizerKind,
    seed: RngSeed,
) -> Result<DenseMatrix> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::EmptyMatrix { rows: d1, cols: d2 });
    }
    if r > d1.min(d2) {
        return Err(Error::invalid("r", format!("must be <= min(d1, d2) = {}, got {r}", d1.min(d2))));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
    }
    if r == 0 {
        return Ok(DenseMatrix::zeros(d1, d2));
    }
    let mut rng = seed.rng();
    let u = orthonormal_columns(&gaussian_matrix(&mut rng, d1, r, 1.0));
    let v = orthonormal_columns(&gaussian_matrix(&mut rng, d2, r, 1.0));
    let spread = Uniform::new_inclusive(0.5, 1.5);
    let sigma: Vec<f64> = (0..r).map(|_| spread.sample(&mut rng)).collect();

    let us = DenseMatrix::from_fn(d1, r, |i, k| u[(i, k)] * sigma[k]);
    let theta = us.matmul(&v.transpose())?;
    let theta = theta.scale(1.0 / theta.frobenius_norm());

    let spikiness = reg::spikiness(kind, &theta);
    Ok(if spikiness <= alpha {
        theta
    } else {
        match kind {
            RegularizerKind::ElementwiseL1 => theta.scale(alpha / spikiness),
            RegularizerKind::Columnwise21 => reg::project_spikiness_ball(kind, &theta, alpha),
        }
    })
}

/// Sparse matrix with a uniformly random support of size `s`.
///
/// Entries (l1) or whole columns (col21) are chosen without replacement and
/// filled with values uniform on `[-magnitude, magnitude]`.
pub fn gen_sparse(
    d1: usize,
    d2: usize,
    s: usize,
    kind: RegularizerKind,
    magnitude: f64,
    seed: RngSeed,
) -> Result<(DenseMatrix, Support)> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::EmptyMatrix { rows: d1, cols: d2 });
    }
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::invalid("magnitude", format!("must be finite and >= 0, got {magnitude}")));
    }
    let limit = match kind {
        RegularizerKind::ElementwiseL1 => d1 * d2,
        RegularizerKind::Columnwise21 => d2,
    };
    if s > limit {
        return Err(Error::invalid("s", format!("must be <= {limit} for {kind}, got {s}")));
    }
    let mut rng = seed.rng();
    let mut out = DenseMatrix::zeros(d1, d2);
    let value = |rng: &mut ChaCha20Rng| {
        if magnitude == 0.0 {
            0.0
        } else {
            rng.gen_range(-magnitude..=magnitude)
        }
    };
    let mut picked = sample(&mut rng, limit, s).into_vec();
    picked.sort_unstable();
    let support = match kind {
        RegularizerKind::ElementwiseL1 => {
            for &idx in &picked {
                out.as_mut_slice()[idx] = value(&mut rng);
            }
            Support::Entries(picked.iter().map(|&idx| (idx / d2, idx % d2)).collect())
        }
        RegularizerKind::Columnwise21 => {
            for &col in &picked {
                for i in 0..d1 {
                    out[(i, col)] = value(&mut rng);
                }
            }
            Support::Columns(picked.into_iter().collect())
        }
    };
    Ok((out, support))
}

/// I.i.d. `N(0, nu^2 / (d1 d2))` entries.
pub fn gen_gaussian_noise(d1: usize, d2: usize, nu: f64, seed: RngSeed) -> Result<DenseMatrix> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::EmptyMatrix { rows: d1, cols: d2 });
    }
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::invalid("nu", format!("must be finite and >= 0, got {nu}")));
    }
    if nu == 0.0 {
        return Ok(DenseMatrix::zeros(d1, d2));
    }
    let sd = nu / ((d1 * d2) as f64).sqrt();
    Ok(gaussian_matrix(&mut seed.rng(), d1, d2, sd))
}

/// `n x d` matrix whose rows are i.i.d. `N(0, sigma)`.
fn gaussian_rows(sigma: &DenseMatrix, n: usize, rng: &mut ChaCha20Rng) -> Result<DenseMatrix> {
    let d = sigma.rows();
    let (values, vectors) = symmetric_eigen(sigma)?;
    // sigma = L L^T with L = V diag(sqrt(max(ev, 0))).
    let root = DenseMatrix::from_fn(d, d, |i, k| vectors[(i, k)] * values[k].max(0.0).sqrt());
    gaussian_matrix(rng, n, d, 1.0).matmul(&root.transpose())
}

fn sample_covariance(z: &DenseMatrix) -> Result<DenseMatrix> {
    let n = z.rows() as f64;
    let gram = z.transpose().matmul(z)?.scale(1.0 / n);
    Ok(symmetrize(&gram))
}

fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    (m + &m.transpose()).scale(0.5)
}

/// Re-centered Wishart noise `(1/n) sum_i z_i z_i^T - sigma` with `z_i ~ N(0, sigma)`.
pub fn gen_wishart_noise(sigma: &DenseMatrix, n: usize, seed: RngSeed) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    check_psd(sigma)?;
    let z = gaussian_rows(sigma, n, &mut seed.rng())?;
    Ok(symmetrize(&(&sample_covariance(&z)? - sigma)))
}

/// A corrupted sample covariance together with its exact decomposition.
#[derive(Clone, Debug)]
pub struct RobustCovSample {
    /// `(1/n) sum_i (u_i + v_i)(u_i + v_i)^T`.
    pub y: DenseMatrix,
    /// Column-sparse part with `y = theta* + gamma* + gamma*^T + w`.
    pub gamma_star: DenseMatrix,
    /// `(1/n) sum_i u_i u_i^T - theta*`.
    pub wishart: DenseMatrix,
    /// Clean draws `u_i`, one per row.
    pub clean: DenseMatrix,
    /// Corruptions `v_i`, one per row.
    pub corruption: DenseMatrix,
}

/// Sample covariance of `n` draws `u_i ~ N(0, theta*)` corrupted on the columns in `corrupt_cols`.
pub fn gen_robust_cov_sample(
    theta_star: &DenseMatrix,
    corrupt_cols: &Support,
    n: usize,
    magnitude: f64,
    seed: RngSeed,
) -> Result<RobustCovSample> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::invalid("magnitude", format!("must be finite and >= 0, got {magnitude}")));
    }
    check_psd(theta_star)?;
    let d = theta_star.rows();
    let cols = match corrupt_cols {
        Support::Columns(c) => c,
        Support::Entries(_) => return Err(Error::SupportKindMismatch(RegularizerKind::Columnwise21.name())),
    };
    corrupt_cols.validate(d, d)?;

    let mut rng = seed.rng();
    let clean = gaussian_rows(theta_star, n, &mut rng)?;
    let mut corruption = DenseMatrix::zeros(n, d);
    if magnitude > 0.0 {
        for i in 0..n {
            for &j in cols {
                corruption[(i, j)] = rng.gen_range(-magnitude..=magnitude);
            }
        }
    }
    let nf = n as f64;
    let observed = &clean + &corruption;
    let y = sample_covariance(&observed)?;
    let wishart = symmetrize(&(&sample_covariance(&clean)? - theta_star));
    // gamma* = (1/n) sum_i (u_i v_i^T + v_i v_i^T / 2) lives on the corrupted columns.
    let mut gamma_star = clean.transpose().matmul(&corruption)?.scale(1.0 / nf);
    gamma_star.axpy(0.5 / nf, &corruption.transpose().matmul(&corruption)?);
    Ok(RobustCovSample {
        y,
        gamma_star,
        wishart,
        clean,
        corruption,
    })
}

/// Observation matrix of [`gen_robust_cov_sample`].
pub fn gen_robust_cov_instance(
    theta_star: &DenseMatrix,
    corrupt_cols: &Support,
    n: usize,
    magnitude: f64,
    seed: RngSeed,
) -> Result<DenseMatrix> {
    Ok(gen_robust_cov_sample(theta_star, corrupt_cols, n, magnitude, seed)?.y)
}

/// Non-identifiable pair: `theta*` is rank one with spikiness exactly `alpha` and `gamma* = -theta*`.
pub fn bad_pair(kind: RegularizerKind, d1: usize, d2: usize, s: usize, alpha: f64) -> Result<GroundTruth> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::EmptyMatrix { rows: d1, cols: d2 });
    }
    if s > d2 {
        return Err(Error::invalid("s", format!("must be <= d2 = {d2}, got {s}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", format!("must be finite and > 0, got {alpha}")));
    }
    let c = alpha / ((d1 * d2) as f64).sqrt();
    let theta_star = DenseMatrix::from_fn(d1, d2, |i, j| {
        let row_on = kind == RegularizerKind::Columnwise21 || i == 0;
        if row_on && j < s {
            c
        } else {
            0.0
        }
    });
    let support = match kind {
        RegularizerKind::ElementwiseL1 => Support::Entries((0..s).map(|j| (0, j)).collect()),
        RegularizerKind::Columnwise21 => Support::Columns((0..s).collect()),
    };
    Ok(GroundTruth {
        gamma_star: -&theta_star,
        theta_frobenius: theta_star.frobenius_norm(),
        theta_star,
        rank: usize::from(s > 0),
        sparsity: s,
        alpha_used: alpha,
        support,
    })
}

/// The design `I + e1 1^T / sqrt(d)`.
pub fn gen_twostep_failure_design(d: usize) -> Result<DenseMatrix> {
    if d < 2 {
        return Err(Error::invalid("d", format!("must be >= 2, got {d}")));
    }
    let shift = 1.0 / (d as f64).sqrt();
    let mut x = DenseMatrix::identity(d);
    for j in 0..d {
        x[(0, j)] += shift;
    }
    Ok(x)
}

/// Low-rank plus sparse truth from the instance seed.
pub fn gen_ground_truth(
    kind: RegularizerKind,
    d1: usize,
    d2: usize,
    r: usize,
    s: usize,
    alpha: f64,
    magnitude: f64,
    seed: RngSeed,
) -> Result<GroundTruth> {
    let theta_star = gen_low_rank(d1, d2, r, alpha, kind, seed.derive(STREAM_LOW_RANK))?;
    let (gamma_star, support) = gen_sparse(d1, d2, s, kind, magnitude, seed.derive(STREAM_SPARSE))?;
    Ok(GroundTruth {
        theta_frobenius: theta_star.frobenius_norm(),
        theta_star,
        gamma_star,
        rank: r,
        sparsity: s,
        alpha_used: alpha,
        support,
    })
}

/// Noise stream belonging to an instance seed.
pub fn noise_seed(seed: RngSeed) -> RngSeed {
    seed.derive(STREAM_NOISE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{rank, singular_values};

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let base = RngSeed(42);
        assert_eq!(derive_seed(base, 3), derive_seed(base, 3));
        assert_ne!(derive_seed(base, 3), derive_seed(base, 4));
        let a = gen_gaussian_noise(4, 5, 1.0, RngSeed(7)).unwrap();
        let b = gen_gaussian_noise(4, 5, 1.0, RngSeed(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn low_rank_examples() {
        let kind = RegularizerKind::ElementwiseL1;
        assert_eq!(gen_low_rank(6, 5, 0, 1.0, kind, RngSeed(1)).unwrap().max_abs(), 0.0);
        let t = gen_low_rank(20, 15, 3, 1e6, kind, RngSeed(2)).unwrap();
        assert!((t.frobenius_norm() - 1.0).abs() < 1e-12);
        assert_eq!(rank(&t).unwrap(), 3);
        assert!(gen_low_rank(4, 3, 4, 1.0, kind, RngSeed(3)).is_err());
    }

    #[test]
    fn low_rank_tight_alpha_keeps_rank() {
        for kind in [RegularizerKind::ElementwiseL1, RegularizerKind::Columnwise21] {
            let t = gen_low_rank(30, 20, 2, 1.05, kind, RngSeed(5)).unwrap();
            assert!(reg::spikiness(kind, &t) <= 1.05 + 1e-12);
            assert!(t.frobenius_norm() < 1.0);
            assert!(rank(&t).unwrap() <= 2);
        }
    }

    #[test]
    fn sparse_examples() {
        let (m, sup) = gen_sparse(4, 5, 0, RegularizerKind::ElementwiseL1, 1.0, RngSeed(1)).unwrap();
        assert_eq!(m.max_abs(), 0.0);
        assert!(sup.is_empty());
        let (_, sup) = gen_sparse(4, 5, 20, RegularizerKind::ElementwiseL1, 1.0, RngSeed(1)).unwrap();
        assert_eq!(sup, Support::full(RegularizerKind::ElementwiseL1, 4, 5));
        let (m, sup) = gen_sparse(4, 5, 2, RegularizerKind::Columnwise21, 2.0, RngSeed(9)).unwrap();
        assert_eq!(sup.len(), 2);
        assert!(m.max_abs() <= 2.0);
        for j in 0..5 {
            assert_eq!(m.column_norm(j) > 0.0, sup.contains(0, j));
        }
        assert!(gen_sparse(4, 5, 6, RegularizerKind::Columnwise21, 1.0, RngSeed(1)).is_err());
    }

    #[test]
    fn noise_variance() {
        assert_eq!(gen_gaussian_noise(3, 3, 0.0, RngSeed(1)).unwrap().max_abs(), 0.0);
        let w = gen_gaussian_noise(100, 100, 1.0, RngSeed(11)).unwrap();
        let n = 1e4;
        let mean = w.as_slice().iter().sum::<f64>() / n;
        let var = w.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.9e-4..=1.1e-4).contains(&var), "variance {var}");
    }

    #[test]
    fn wishart_examples() {
        let w = gen_wishart_noise(&DenseMatrix::zeros(3, 3), 10, RngSeed(1)).unwrap();
        assert_eq!(w.max_abs(), 0.0);
        let sigma = DenseMatrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.5]]).unwrap();
        let w = gen_wishart_noise(&sigma, 50, RngSeed(2)).unwrap();
        assert!(w.is_symmetric(1e-12));
        assert!(gen_wishart_noise(&DenseMatrix::diag(&[1.0, -1.0]), 5, RngSeed(1)).is_err());
    }

    #[test]
    fn wishart_concentrates() {
        let sigma = DenseMatrix::from_rows(&[[1.0, 0.3], [0.3, 0.5]]).unwrap();
        let w = gen_wishart_noise(&sigma, 1_000_000, RngSeed(3)).unwrap();
        assert!(w.frobenius_norm() <= 0.01, "{}", w.frobenius_norm());
    }

    #[test]
    fn robust_cov_decomposition() {
        let theta = gen_low_rank(6, 6, 2, 1e6, RegularizerKind::Columnwise21, RngSeed(4)).unwrap();
        let theta = theta.matmul(&theta.transpose()).unwrap();
        let cols = Support::Columns([1, 4].into_iter().collect());
        let rc = gen_robust_cov_sample(&theta, &cols, 40, 0.7, RngSeed(8)).unwrap();
        let recon = &(&(&theta + &rc.gamma_star) + &rc.gamma_star.transpose()) + &rc.wishart;
        assert!((&recon - &rc.y).max_abs() < 1e-12);
        for j in [0, 2, 3, 5] {
            assert_eq!(rc.gamma_star.column_norm(j), 0.0);
        }
        let clean_cov = sample_covariance(&rc.clean).unwrap();
        let excess = &rc.y - &clean_cov;
        for i in [0, 2, 3, 5] {
            for j in [0, 2, 3, 5] {
                assert!(excess[(i, j)].abs() < 1e-14);
            }
        }

        let empty = Support::empty(RegularizerKind::Columnwise21);
        let y = gen_robust_cov_instance(&theta, &empty, 40, 0.7, RngSeed(8)).unwrap();
        let w = gen_wishart_noise(&theta, 40, RngSeed(8)).unwrap();
        assert!((&y - &(&theta + &w)).max_abs() < 1e-12);
        let y0 = gen_robust_cov_instance(&theta, &cols, 40, 0.0, RngSeed(8)).unwrap();
        assert!((&y0 - &y).max_abs() < 1e-12);
    }

    #[test]
    fn bad_pair_examples() {
        let alpha = 3.0;
        let g = bad_pair(RegularizerKind::ElementwiseL1, 2, 2, 2, alpha).unwrap();
        let expect = DenseMatrix::from_rows(&[[1.5, 1.5], [0.0, 0.0]]).unwrap();
        assert!((&g.theta_star - &expect).max_abs() < 1e-15);
        assert_eq!((&g.theta_star + &g.gamma_star).max_abs(), 0.0);
        for kind in [RegularizerKind::ElementwiseL1, RegularizerKind::Columnwise21] {
            let g = bad_pair(kind, 8, 10, 4, alpha).unwrap();
            assert!((reg::spikiness(kind, &g.theta_star) - alpha).abs() < 1e-12);
            let expect = match kind {
                RegularizerKind::ElementwiseL1 => alpha * alpha * 4.0 / 80.0,
                RegularizerKind::Columnwise21 => alpha * alpha * 4.0 / 10.0,
            };
            assert!((g.theta_star.frobenius_norm_sq() - expect).abs() < 1e-12);
        }
        assert!(bad_pair(RegularizerKind::ElementwiseL1, 3, 3, 4, 1.0).is_err());
    }

    #[test]
    fn failure_design() {
        let x = gen_twostep_failure_design(4).unwrap();
        assert_eq!(x.row(0), &[1.5, 0.5, 0.5, 0.5]);
        let d = 100;
        let x = gen_twostep_failure_design(d).unwrap();
        let s = singular_values(&x).unwrap();
        assert!(s[0] <= 2.0);
        assert!(x.column_norms().into_iter().all(|c| c <= 2.0));
        // The rank-one update moves two singular values off 1; the smaller
        // is the root of a 2x2 characteristic polynomial.
        let h = 1.0 / (d as f64).sqrt();
        let (tr, det) = (3.0 + 2.0 * h, (1.0 + h) * (1.0 + h));
        let small = ((tr - (tr * tr - 4.0 * det).sqrt()) / 2.0).sqrt();
        assert!((s[d - 1] - small).abs() < 1e-10);
        assert!(gen_twostep_failure_design(1).is_err());
    }
}
