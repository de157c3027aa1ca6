//! Composite convex estimator and the two-step baseline.
//!
//! The estimator solves
//!
//! ```text
//! min  1/2 ||Y - X(theta + gamma)||_F^2 + lambda ||theta||_nuc + mu R(gamma)
//! s.t. spikiness(theta) <= alpha
//! ```
//!
//! by accelerated proximal gradient on the pair `(theta, gamma)`. The prox
//! separates into blocks: `gamma` takes the regularizer prox, `theta` takes
//! the prox of the nuclear norm restricted to the spikiness ball, computed by
//! a Dykstra-type alternation between singular value thresholding and the
//! ball projection. The last step of that alternation is always the
//! projection, so every iterate is feasible.

use crate::error::{Error, Result};
use crate::matrix::{singular_values, svd, DenseMatrix};
use crate::obsop::ObservationOperator;
use crate::reg::{self, PenaltyParams, RegularizerKind};

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub y: DenseMatrix,
    pub op: ObservationOperator,
    pub kind: RegularizerKind,
    pub params: PenaltyParams,
    /// Ground truth `(theta*, gamma*)` when known.
    pub truth: Option<(DenseMatrix, DenseMatrix)>,
}

impl ProblemInstance {
    pub fn new(
        y: DenseMatrix,
        op: ObservationOperator,
        kind: RegularizerKind,
        params: PenaltyParams,
        truth: Option<(DenseMatrix, DenseMatrix)>,
    ) -> Result<Self> {
        y.expect_dims(op.out_dims(), "problem instance", "y")?;
        if let Some((t, g)) = &truth {
            t.expect_dims(op.in_dims(), "problem instance", "theta_star")?;
            g.expect_dims(op.in_dims(), "problem instance", "gamma_star")?;
        }
        Ok(Self {
            y,
            op,
            kind,
            params,
            truth,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    FixedLipschitz,
    Backtracking,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative objective change (and relative prox-gradient step) that ends the outer loop.
    pub rel_tol: f64,
    pub dykstra_iters: usize,
    pub dykstra_tol: f64,
    pub step_rule: StepRule,
    /// Function-value restart of the momentum; keeps the objective trace monotone.
    pub restart: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            rel_tol: 1e-7,
            dykstra_iters: 20,
            dykstra_tol: 1e-9,
            step_rule: StepRule::FixedLipschitz,
            restart: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be positive"));
        }
        if self.dykstra_iters == 0 {
            return Err(Error::invalid("dykstra_iters", "must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        if !(self.dykstra_tol > 0.0) {
            return Err(Error::invalid("dykstra_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionEstimate {
    pub theta_hat: DenseMatrix,
    pub gamma_hat: DenseMatrix,
    /// Objective value of the accepted iterate, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// `max(0, spikiness(theta_hat) - alpha)`.
    pub feasibility_residual: f64,
    /// `||x - T(x)||_F / max(1, ||x||_F)` for the proximal-gradient map `T` at the returned point.
    pub fixed_point_residual: Option<f64>,
    /// Outer iterations whose theta-block prox hit the Dykstra round limit.
    pub inexact_prox_steps: usize,
    pub converged: bool,
}

impl DecompositionEstimate {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace always holds the initial point")
    }
}

/// `1/2 ||Y - X(theta + gamma)||_F^2 + lambda ||theta||_nuc + mu R(gamma)`.
pub fn objective(inst: &ProblemInstance, theta: &DenseMatrix, gamma: &DenseMatrix) -> Result<f64> {
    let fitted = inst.op.apply(theta, gamma)?;
    let loss = 0.5 * (&inst.y - &fitted).frobenius_norm_sq();
    let nuclear = if inst.params.lambda == 0.0 {
        0.0
    } else {
        singular_values(theta)?.iter().sum::<f64>()
    };
    Ok(loss + inst.params.lambda * nuclear + inst.params.mu * reg::reg_value(inst.kind, gamma))
}

/// Singular value thresholding: the prox of `tau ||.||_nuc`.
pub fn svt(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_with_norm(m, tau)?.0)
}

fn svt_with_norm(m: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, f64)> {
    debug_assert!(tau >= 0.0);
    let f = svd(m)?;
    let nuclear = f.singular_values.iter().map(|s| (s - tau).max(0.0)).sum();
    if tau == 0.0 {
        return Ok((m.clone(), nuclear));
    }
    Ok((f.reconstruct_with(|s| (s - tau).max(0.0)), nuclear))
}

/// Output of [`prox_nuclear_constrained`].
#[derive(Clone, Debug)]
pub struct JointProx {
    pub matrix: DenseMatrix,
    /// Alternation rounds performed (0 when a closed form applied).
    pub rounds: usize,
    pub converged: bool,
    /// Nuclear norm of `matrix` when it is known without another SVD.
    pub nuclear_norm: Option<f64>,
}

/// Approximate `argmin_Z 1/2 ||Z - m||_F^2 + tau ||Z||_nuc` subject to `spikiness(Z) <= alpha`.
pub fn prox_nuclear_constrained(
    m: &DenseMatrix,
    tau: f64,
    alpha: f64,
    kind: RegularizerKind,
    cfg: &SolverConfig,
) -> Result<JointProx> {
    if alpha.is_infinite() {
        let (matrix, nuc) = svt_with_norm(m, tau)?;
        return Ok(JointProx {
            matrix,
            rounds: 0,
            converged: true,
            nuclear_norm: Some(nuc),
        });
    }
    if tau == 0.0 {
        return Ok(JointProx {
            matrix: reg::project_spikiness_ball(kind, m, alpha),
            rounds: 0,
            converged: true,
            nuclear_norm: None,
        });
    }

    // If the unconstrained prox is feasible it is also the constrained one.
    let (first, nuc) = svt_with_norm(m, tau)?;
    if reg::spikiness(kind, &first) <= alpha {
        return Ok(JointProx {
            matrix: first,
            rounds: 0,
            converged: true,
            nuclear_norm: Some(nuc),
        });
    }

    // Dykstra-like splitting for prox_{f + g}(m), f = tau ||.||_nuc, g = ball indicator.
    let (rows, cols) = m.dims();
    let mut x = m.clone();
    let mut p = DenseMatrix::zeros(rows, cols);
    let mut q = DenseMatrix::zeros(rows, cols);
    let mut y = first;
    for round in 1..=cfg.dykstra_iters {
        if round > 1 {
            y = svt(&(&x + &p), tau)?;
        }
        p = &(&x + &p) - &y;
        let shifted = &y + &q;
        let x_next = reg::project_spikiness_ball(kind, &shifted, alpha);
        q = &shifted - &x_next;
        let change = (&x_next - &x).frobenius_norm();
        x = x_next;
        if change < cfg.dykstra_tol {
            return Ok(JointProx {
                matrix: x,
                rounds: round,
                converged: true,
                nuclear_norm: None,
            });
        }
    }
    Ok(JointProx {
        matrix: x,
        rounds: cfg.dykstra_iters,
        converged: false,
        nuclear_norm: None,
    })
}

/// Cap on the growth of the Dykstra round budget, as a multiple of the configured value.
const MAX_DYKSTRA_BOOST: usize = 64;

/// A point of the joint variable together with cached quantities.
#[derive(Clone)]
struct Iterate {
    theta: DenseMatrix,
    gamma: DenseMatrix,
    objective: f64,
}

struct Composite<'a> {
    inst: &'a ProblemInstance,
    /// Copy of the caller's config; `dykstra_iters` grows when an inexact prox stalls descent.
    cfg: SolverConfig,
    inexact: usize,
}

impl Composite<'_> {
    fn residual(&self, theta: &DenseMatrix, gamma: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(&self.inst.y - &self.inst.op.apply(theta, gamma)?)
    }

    fn smooth(&self, theta: &DenseMatrix, gamma: &DenseMatrix) -> Result<f64> {
        Ok(0.5 * self.residual(theta, gamma)?.frobenius_norm_sq())
    }

    fn evaluate(&self, theta: DenseMatrix, gamma: DenseMatrix, nuclear: Option<f64>) -> Result<Iterate> {
        let p = &self.inst.params;
        let nuc = match (p.lambda == 0.0, nuclear) {
            (true, _) => 0.0,
            (false, Some(v)) => v,
            (false, None) => singular_values(&theta)?.iter().sum(),
        };
        let objective =
            self.smooth(&theta, &gamma)? + p.lambda * nuc + p.mu * reg::reg_value(self.inst.kind, &gamma);
        Ok(Iterate {
            theta,
            gamma,
            objective,
        })
    }

    /// One proximal-gradient step from `(theta, gamma)` with step `1/lip`.
    fn prox_step(
        &mut self,
        theta: &DenseMatrix,
        gamma: &DenseMatrix,
        grad: &(DenseMatrix, DenseMatrix),
        lip: f64,
    ) -> Result<(DenseMatrix, DenseMatrix, Option<f64>)> {
        let p = &self.inst.params;
        let mut theta_arg = theta.clone();
        theta_arg.axpy(1.0 / lip, &grad.0);
        let mut gamma_arg = gamma.clone();
        gamma_arg.axpy(1.0 / lip, &grad.1);
        let jp = prox_nuclear_constrained(&theta_arg, p.lambda / lip, p.alpha, self.inst.kind, &self.cfg)?;
        if !jp.converged {
            self.inexact += 1;
        }
        let gamma_next = reg::prox(self.inst.kind, &gamma_arg, p.mu / lip);
        Ok((jp.matrix, gamma_next, jp.nuclear_norm))
    }

    /// Negative gradient blocks of the smooth part, i.e. the adjoint of the residual.
    fn descent(&self, theta: &DenseMatrix, gamma: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
        self.inst.op.adjoint(&self.residual(theta, gamma)?)
    }

    /// Step from `(theta, gamma)` honoring the step rule; returns the new point and the constant used.
    fn step(&mut self, theta: &DenseMatrix, gamma: &DenseMatrix, lip: f64, lip_max: f64) -> Result<(Iterate, f64)> {
        let grad = self.descent(theta, gamma)?;
        match self.cfg.step_rule {
            StepRule::FixedLipschitz => {
                let (t, g, nuc) = self.prox_step(theta, gamma, &grad, lip)?;
                Ok((self.evaluate(t, g, nuc)?, lip))
            }
            StepRule::Backtracking => {
                let f0 = self.smooth(theta, gamma)?;
                let mut l = lip;
                loop {
                    let (t, g, nuc) = self.prox_step(theta, gamma, &grad, l)?;
                    let dt = &t - theta;
                    let dg = &g - gamma;
                    // grad holds the negative gradient.
                    let model = f0 - grad.0.inner(&dt) - grad.1.inner(&dg)
                        + 0.5 * l * (dt.frobenius_norm_sq() + dg.frobenius_norm_sq());
                    let f1 = self.smooth(&t, &g)?;
                    if f1 <= model + 1e-12 * f0.abs().max(1.0) || l >= lip_max {
                        return Ok((self.evaluate(t, g, nuc)?, l));
                    }
                    l = (2.0 * l).min(lip_max);
                }
            }
        }
    }
}

fn joint_distance(a: &Iterate, theta: &DenseMatrix, gamma: &DenseMatrix) -> f64 {
    ((&a.theta - theta).frobenius_norm_sq() + (&a.gamma - gamma).frobenius_norm_sq()).sqrt()
}

fn joint_norm(it: &Iterate) -> f64 {
    (it.theta.frobenius_norm_sq() + it.gamma.frobenius_norm_sq()).sqrt()
}

/// Accelerated proximal gradient for the composite program, started at `(0, 0)`.
pub fn solve_composite(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<DecompositionEstimate> {
    cfg.validate()?;
    let p = inst.params;
    let lip_max = inst.op.lipschitz()?;
    let mut lip = match cfg.step_rule {
        StepRule::FixedLipschitz => lip_max,
        StepRule::Backtracking => (lip_max / 16.0).max(f64::MIN_POSITIVE),
    };
    let (d1, d2) = inst.op.in_dims();
    let mut solver = Composite {
        inst,
        cfg: *cfg,
        inexact: 0,
    };
    let max_dykstra = cfg.dykstra_iters.saturating_mul(MAX_DYKSTRA_BOOST);

    let mut x = solver.evaluate(DenseMatrix::zeros(d1, d2), DenseMatrix::zeros(d1, d2), Some(0.0))?;
    let mut trace = vec![x.objective];
    let mut y_theta = x.theta.clone();
    let mut y_gamma = x.gamma.clone();
    let mut t = 1.0_f64;
    let mut iterations = 0;
    let mut converged = false;
    let mut certificate = None;

    while iterations < cfg.max_iters {
        iterations += 1;
        let (mut z, mut used) = solver.step(&y_theta, &y_gamma, lip, lip_max)?;
        let mut from_theta = &y_theta;
        let mut from_gamma = &y_gamma;
        if cfg.restart && z.objective > x.objective {
            // Momentum overshot: drop it and take a plain step from x. With an
            // exact prox that step cannot increase the objective, so a failure
            // means the theta prox needs more alternation rounds.
            t = 1.0;
            from_theta = &x.theta;
            from_gamma = &x.gamma;
            loop {
                let (plain, l) = solver.step(&x.theta, &x.gamma, lip, lip_max)?;
                z = plain;
                used = l;
                if z.objective <= x.objective || solver.cfg.dykstra_iters >= max_dykstra {
                    break;
                }
                solver.cfg.dykstra_iters = (solver.cfg.dykstra_iters * 4).min(max_dykstra);
            }
            if z.objective > x.objective {
                trace.push(x.objective);
                break;
            }
        }
        lip = used;

        let step_len = joint_distance(&z, from_theta, from_gamma) / joint_norm(&z).max(1.0);
        let decrease = (x.objective - z.objective).abs();
        let rel_change = if decrease == 0.0 {
            0.0
        } else {
            decrease / x.objective.abs().max(f64::MIN_POSITIVE)
        };

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y_theta = z.theta.clone();
        y_theta.axpy(beta, &(&z.theta - &x.theta));
        y_gamma = z.gamma.clone();
        y_gamma.axpy(beta, &(&z.gamma - &x.gamma));
        t = t_next;
        x = z;
        trace.push(x.objective);

        if rel_change <= cfg.rel_tol && step_len <= cfg.rel_tol {
            let c = fixed_point_residual(&mut solver, &x, lip, lip_max)?;
            certificate = Some(c);
            if c <= 10.0 * cfg.rel_tol {
                converged = true;
                break;
            }
        }
    }

    let certificate = match certificate {
        Some(c) if converged => c,
        _ => fixed_point_residual(&mut solver, &x, lip, lip_max)?,
    };
    if !converged {
        converged = certificate <= 10.0 * cfg.rel_tol && iterations < cfg.max_iters;
    }

    let feasibility_residual = if p.alpha.is_finite() {
        (reg::spikiness(inst.kind, &x.theta) - p.alpha).max(0.0)
    } else {
        0.0
    };
    Ok(DecompositionEstimate {
        theta_hat: x.theta,
        gamma_hat: x.gamma,
        objective_trace: trace,
        iterations,
        feasibility_residual,
        fixed_point_residual: Some(certificate),
        inexact_prox_steps: solver.inexact,
        converged,
    })
}

fn fixed_point_residual(solver: &mut Composite<'_>, x: &Iterate, lip: f64, lip_max: f64) -> Result<f64> {
    let (tx, _) = solver.step(&x.theta, &x.gamma, lip, lip_max)?;
    Ok(joint_distance(&tx, &x.theta, &x.gamma) / joint_norm(x).max(1.0))
}

/// Two-step estimator: soft-threshold `Y` for the sparse part, then SVT the remainder.
///
/// Only meaningful for the identity observation operator.
pub fn two_step(op: &ObservationOperator, y: &DenseMatrix, lambda: f64, mu: f64) -> Result<DecompositionEstimate> {
    if !op.is_identity() {
        return Err(Error::TwoStepRequiresIdentity);
    }
    y.expect_dims(op.out_dims(), "two_step", "y")?;
    two_step_unchecked(y, lambda, mu)
}

/// [`two_step`] without the operator guard, for demonstrating its failure on
/// non-identity observations.
pub fn two_step_unchecked(y: &DenseMatrix, lambda: f64, mu: f64) -> Result<DecompositionEstimate> {
    if !(lambda >= 0.0 && mu >= 0.0) {
        return Err(Error::invalid("lambda/mu", "must be nonnegative"));
    }
    let kind = RegularizerKind::ElementwiseL1;
    let gamma_hat = reg::prox(kind, y, mu);
    let (theta_hat, nuclear) = svt_with_norm(&(y - &gamma_hat), lambda)?;

    // Objective after each block update, starting from (0, 0).
    let obj = |theta: &DenseMatrix, gamma: &DenseMatrix, nuc: f64| {
        0.5 * (&(y - theta) - gamma).frobenius_norm_sq() + lambda * nuc + mu * reg::reg_value(kind, gamma)
    };
    let zero = DenseMatrix::zeros(y.rows(), y.cols());
    let trace = vec![
        obj(&zero, &zero, 0.0),
        obj(&zero, &gamma_hat, 0.0),
        obj(&theta_hat, &gamma_hat, nuclear),
    ];
    Ok(DecompositionEstimate {
        theta_hat,
        gamma_hat,
        objective_trace: trace,
        iterations: 2,
        feasibility_residual: 0.0,
        fixed_point_residual: None,
        inexact_prox_steps: 0,
        converged: true,
    })
}
