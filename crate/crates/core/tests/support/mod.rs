//! Reference oracles and certificate checks shared by the test targets.
//!
//! Nothing here calls into the solver: the oracles are built from the SVD
//! backend, elementwise arithmetic and the regularizer norms only.

#![allow(dead_code)]

use matdecomp::matrix::singular_values;
use matdecomp::reg::{self, RegularizerKind};
use matdecomp::synth::RngSeed;
use matdecomp::{svd, DenseMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn random_kind(rng: &mut impl Rng) -> RegularizerKind {
    if rng.gen_bool(0.5) {
        RegularizerKind::ElementwiseL1
    } else {
        RegularizerKind::Columnwise21
    }
}

/// A small identity-operator problem with mixed parameters.
#[derive(Clone, Debug)]
pub struct OracleCase {
    pub y: DenseMatrix,
    pub kind: RegularizerKind,
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
}

/// Case `index` of the seeded family: low-rank plus sparse plus noise, both
/// regularizers, and a finite spikiness radius on every other case.
pub fn oracle_case(base: u64, index: u64, d: usize) -> OracleCase {
    let mut rng = RngSeed(base).derive(index).rng();
    let kind = random_kind(&mut rng);
    let u = gaussian(&mut rng, d, 2, 1.0);
    let v = gaussian(&mut rng, d, 2, 1.0);
    let low = u.matmul(&v.transpose()).unwrap();
    let sparse = DenseMatrix::from_fn(d, d, |_, _| if rng.gen_bool(0.2) { rng.gen_range(-3.0..3.0) } else { 0.0 });
    let noise = gaussian(&mut rng, d, d, 0.1);
    let y = &(&low + &sparse) + &noise;
    let lambda = rng.gen_range(0.1..2.0);
    let mu = rng.gen_range(0.05..0.8);
    let alpha = if index % 2 == 0 {
        f64::INFINITY
    } else {
        // Somewhere between half and all of the unconstrained spikiness.
        reg::spikiness(kind, &low) * rng.gen_range(0.3..1.0)
    };
    OracleCase { y, kind, lambda, mu, alpha }
}

pub fn nuclear(m: &DenseMatrix) -> f64 {
    singular_values(m).unwrap().iter().sum()
}

pub fn reg_norm(kind: RegularizerKind, m: &DenseMatrix) -> f64 {
    match kind {
        RegularizerKind::ElementwiseL1 => m.as_slice().iter().map(|x| x.abs()).sum(),
        RegularizerKind::Columnwise21 => (0..m.cols())
            .map(|k| m.column(k).iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum(),
    }
}

pub fn case_objective(case: &OracleCase, theta: &DenseMatrix, gamma: &DenseMatrix) -> f64 {
    let r = &(&case.y - theta) - gamma;
    0.5 * r.frobenius_norm_sq() + case.lambda * nuclear(theta) + case.mu * reg_norm(case.kind, gamma)
}

fn shrink_singular(m: &DenseMatrix, tau: f64) -> DenseMatrix {
    svd(m).unwrap().reconstruct_with(|s| (s - tau).max(0.0))
}

fn shrink_reg(kind: RegularizerKind, m: &DenseMatrix, t: f64) -> DenseMatrix {
    match kind {
        RegularizerKind::ElementwiseL1 => m.map(|x| x.signum() * (x.abs() - t).max(0.0)),
        RegularizerKind::Columnwise21 => {
            let mut out = m.clone();
            for k in 0..m.cols() {
                let col = m.column(k);
                let n = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                let f = if n > t { 1.0 - t / n } else { 0.0 };
                out.set_column(k, &col.iter().map(|x| f * x).collect::<Vec<_>>());
            }
            out
        }
    }
}

/// Box (l1) or column-norm (col21) projection written out independently.
fn project_ball(kind: RegularizerKind, m: &DenseMatrix, alpha: f64) -> DenseMatrix {
    if alpha.is_infinite() {
        return m.clone();
    }
    let (d1, d2) = m.dims();
    match kind {
        RegularizerKind::ElementwiseL1 => {
            let b = alpha / ((d1 * d2) as f64).sqrt();
            m.map(|x| x.max(-b).min(b))
        }
        RegularizerKind::Columnwise21 => {
            let b = alpha / (d2 as f64).sqrt();
            let mut out = m.clone();
            for k in 0..d2 {
                let col = m.column(k);
                let n = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > b {
                    out.set_column(k, &col.iter().map(|x| x * b / n).collect::<Vec<_>>());
                }
            }
            out
        }
    }
}

pub struct OracleSolution {
    pub theta: DenseMatrix,
    pub gamma: DenseMatrix,
    pub objective: f64,
    pub iterations: usize,
}

/// Reference minimizer.
///
/// With `alpha = inf` this is plain proximal gradient with step `1/2`.
/// With a finite radius it is three-operator splitting (Davis and Yin) with
/// the ball projection and the separable nuclear/regularizer shrinkage as the
/// two nonsmooth parts, again with step `1/2`. Stops early only at an exact
/// fixed point in floating point.
pub fn oracle_solve(case: &OracleCase, max_iters: usize) -> OracleSolution {
    let (d1, d2) = case.y.dims();
    let step = 0.5;
    let mut iterations = max_iters;
    if case.alpha.is_infinite() {
        let mut theta = DenseMatrix::zeros(d1, d2);
        let mut gamma = DenseMatrix::zeros(d1, d2);
        for it in 0..max_iters {
            let g = &(&theta + &gamma) - &case.y;
            let t_new = shrink_singular(&(&theta - &(&g * step)), step * case.lambda);
            let g_new = shrink_reg(case.kind, &(&gamma - &(&g * step)), step * case.mu);
            let moved = (&t_new - &theta).frobenius_norm() + (&g_new - &gamma).frobenius_norm();
            theta = t_new;
            gamma = g_new;
            if moved == 0.0 {
                iterations = it + 1;
                break;
            }
        }
        let objective = case_objective(case, &theta, &gamma);
        return OracleSolution { theta, gamma, objective, iterations };
    }

    let mut zt = DenseMatrix::zeros(d1, d2);
    let mut zg = DenseMatrix::zeros(d1, d2);
    let mut out = (zt.clone(), zg.clone());
    for it in 0..max_iters {
        // First nonsmooth part: ball indicator on theta, nothing on gamma.
        let at = project_ball(case.kind, &zt, case.alpha);
        let ag = zg.clone();
        let g = &(&at + &ag) - &case.y;
        let bt = shrink_singular(&(&(&at * 2.0) - &(&zt + &(&g * step))), step * case.lambda);
        let bg = shrink_reg(case.kind, &(&(&ag * 2.0) - &(&zg + &(&g * step))), step * case.mu);
        let dt = &bt - &at;
        let dg = &bg - &ag;
        let moved = dt.frobenius_norm() + dg.frobenius_norm();
        zt = &zt + &dt;
        zg = &zg + &dg;
        out = (at, bg);
        if moved == 0.0 {
            iterations = it + 1;
            break;
        }
    }
    let (theta, gamma) = out;
    let objective = case_objective(case, &theta, &gamma);
    OracleSolution { theta, gamma, objective, iterations }
}

fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).max_abs()
}

fn opnorm(m: &DenseMatrix) -> f64 {
    singular_values(m).unwrap().first().copied().unwrap_or(0.0)
}

/// `x = svt(m, tau)` iff `(m - x) / tau` is a subgradient of the nuclear norm at `x`.
pub fn svt_certificate(m: &DenseMatrix, x: &DenseMatrix, tau: f64, tol: f64) -> Result<(), String> {
    let g = &(m - x) * (1.0 / tau);
    let f = svd(x).unwrap();
    let r = f.rank();
    let (d1, d2) = x.dims();
    let u = DenseMatrix::from_fn(d1, r, |i, k| f.left[(i, k)]);
    let v = DenseMatrix::from_fn(d2, r, |j, k| f.right[(j, k)]);
    let utg = u.transpose().matmul(&g).unwrap();
    let gv = g.matmul(&v).unwrap();
    let e1 = max_abs_diff(&utg, &v.transpose());
    let e2 = max_abs_diff(&gv, &u);
    let pu = &DenseMatrix::identity(d1) - &u.matmul(&u.transpose()).unwrap();
    let pv = &DenseMatrix::identity(d2) - &v.matmul(&v.transpose()).unwrap();
    let w = pu.matmul(&g).unwrap().matmul(&pv).unwrap();
    let wn = opnorm(&w);
    if e1 > tol || e2 > tol || wn > 1.0 + tol {
        return Err(format!("svt certificate: |U^T G - V^T| {e1:.2e}, |G V - U| {e2:.2e}, |W|op {wn:.6}"));
    }
    Ok(())
}

/// `x = prox(m, t)` iff `(m - x) / t` lies in the subdifferential of the regularizer at `x`.
pub fn reg_prox_certificate(kind: RegularizerKind, m: &DenseMatrix, x: &DenseMatrix, t: f64, tol: f64) -> Result<(), String> {
    let g = &(m - x) * (1.0 / t);
    match kind {
        RegularizerKind::ElementwiseL1 => {
            for (k, (&gv, &xv)) in g.as_slice().iter().zip(x.as_slice()).enumerate() {
                let bad = if xv != 0.0 { (gv - xv.signum()).abs() > tol } else { gv.abs() > 1.0 + tol };
                if bad {
                    return Err(format!("l1 certificate fails at entry {k}: g {gv}, x {xv}"));
                }
            }
        }
        RegularizerKind::Columnwise21 => {
            for k in 0..x.cols() {
                let xc = x.column(k);
                let gc = g.column(k);
                let xn = xc.iter().map(|a| a * a).sum::<f64>().sqrt();
                let gn = gc.iter().map(|a| a * a).sum::<f64>().sqrt();
                let bad = if xn > 0.0 {
                    xc.iter().zip(&gc).any(|(a, b)| (b - a / xn).abs() > tol)
                } else {
                    gn > 1.0 + tol
                };
                if bad {
                    return Err(format!("col21 certificate fails at column {k}: |g| {gn}, |x| {xn}"));
                }
            }
        }
    }
    Ok(())
}

/// Relative gap `|a - b| / max(1, |b|)`.
pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
