//! Linear observation operators `X: (theta, gamma) -> X(theta + gamma)` and their adjoints.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{singular_values, DenseMatrix};

/// Relative cutoff below which a design's smallest singular value counts as zero.
const DESIGN_RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ObservationOperator {
    /// `Y = theta + gamma + W`.
    Identity { rows: usize, cols: usize },
    /// `Y = X (theta + gamma) + W` with an `n x d1` design `X` and `d2` tasks.
    Multitask { design: DenseMatrix, tasks: usize },
    /// Robust covariance loss: `Y = theta + gamma + gamma^T + W` on `d x d` matrices.
    SymmetrizedColumn { dim: usize },
}

/// Variant names accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorVariant {
    Identity,
    Multitask,
    SymCol,
}

impl FromStr for OperatorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "multitask" => Ok(Self::Multitask),
            "symcol" => Ok(Self::SymCol),
            other => Err(Error::invalid(
                "operator",
                format!("unknown `{other}` (expected identity, multitask or symcol)"),
            )),
        }
    }
}

impl fmt::Display for OperatorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Multitask => "multitask",
            Self::SymCol => "symcol",
        })
    }
}

/// Restricted strong convexity parameters of the quadratic loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curvature {
    pub gamma: f64,
    pub tau: f64,
    /// Set when `gamma` is a conservative choice rather than a derived constant.
    pub conservative: bool,
}

/// Singular values and column norms of the rescaled design `X / sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignStats {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kappa_max: f64,
}

impl ObservationOperator {
    pub fn identity(rows: usize, cols: usize) -> Self {
        Self::Identity { rows, cols }
    }

    /// Multitask operator; rejects designs without full column rank.
    pub fn multitask(design: DenseMatrix, tasks: usize) -> Result<Self> {
        if tasks == 0 {
            return Err(Error::invalid("tasks", "must be positive"));
        }
        let s = singular_values(&design)?;
        let top = s[0];
        let bottom = if design.rows() < design.cols() { 0.0 } else { *s.last().unwrap() };
        if bottom <= DESIGN_RANK_TOL * top || top == 0.0 {
            return Err(Error::ZeroCurvature { sigma_min: bottom });
        }
        Ok(Self::Multitask { design, tasks })
    }

    pub fn symmetrized_column(dim: usize) -> Self {
        Self::SymmetrizedColumn { dim }
    }

    pub fn variant(&self) -> OperatorVariant {
        match self {
            Self::Identity { .. } => OperatorVariant::Identity,
            Self::Multitask { .. } => OperatorVariant::Multitask,
            Self::SymmetrizedColumn { .. } => OperatorVariant::SymCol,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity { .. })
    }

    /// Shape `(d1, d2)` of `theta` and `gamma`.
    pub fn in_dims(&self) -> (usize, usize) {
        match self {
            Self::Identity { rows, cols } => (*rows, *cols),
            Self::Multitask { design, tasks } => (design.cols(), *tasks),
            Self::SymmetrizedColumn { dim } => (*dim, *dim),
        }
    }

    /// Shape `(n1, n2)` of the observations.
    pub fn out_dims(&self) -> (usize, usize) {
        match self {
            Self::Identity { rows, cols } => (*rows, *cols),
            Self::Multitask { design, tasks } => (design.rows(), *tasks),
            Self::SymmetrizedColumn { dim } => (*dim, *dim),
        }
    }

    pub fn apply(&self, theta: &DenseMatrix, gamma: &DenseMatrix) -> Result<DenseMatrix> {
        theta.expect_dims(self.in_dims(), "apply", "theta")?;
        gamma.expect_dims(self.in_dims(), "apply", "gamma")?;
        Ok(match self {
            Self::Identity { .. } => theta + gamma,
            Self::Multitask { design, .. } => design.matmul(&(theta + gamma))?,
            Self::SymmetrizedColumn { .. } => {
                let mut out = theta + gamma;
                out.axpy(1.0, &gamma.transpose());
                out
            }
        })
    }

    /// Adjoint of the joint map, returned as the `(theta, gamma)` blocks.
    pub fn adjoint(&self, residual: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
        residual.expect_dims(self.out_dims(), "adjoint", "residual")?;
        Ok(match self {
            Self::Identity { .. } => (residual.clone(), residual.clone()),
            Self::Multitask { design, .. } => {
                let back = design.transpose().matmul(residual)?;
                (back.clone(), back)
            }
            Self::SymmetrizedColumn { .. } => {
                let sym = residual + &residual.transpose();
                (residual.clone(), sym)
            }
        })
    }

    pub fn curvature(&self) -> Result<Curvature> {
        match self {
            Self::Identity { .. } => Ok(Curvature {
                gamma: 1.0,
                tau: 0.0,
                conservative: false,
            }),
            Self::Multitask { design, .. } => {
                let s = singular_values(design)?;
                let sigma_min = if design.rows() < design.cols() { 0.0 } else { *s.last().unwrap() };
                if sigma_min <= DESIGN_RANK_TOL * s[0] {
                    return Err(Error::ZeroCurvature { sigma_min });
                }
                Ok(Curvature {
                    gamma: sigma_min * sigma_min,
                    tau: 0.0,
                    conservative: false,
                })
            }
            // The theta block sees the loss with unit curvature; nothing sharper
            // is derived for the symmetrized gamma block.
            Self::SymmetrizedColumn { .. } => Ok(Curvature {
                gamma: 1.0,
                tau: 0.0,
                conservative: true,
            }),
        }
    }

    /// Lipschitz constant of the gradient of `1/2 ||Y - X(theta + gamma)||_F^2` in `(theta, gamma)`:
    /// 2 for identity, `2 sigma_max(X)^2` for multitask and 8 for the symmetrized operator.
    pub fn lipschitz(&self) -> Result<f64> {
        Ok(match self {
            Self::Identity { .. } => 2.0,
            Self::Multitask { design, .. } => {
                let top = singular_values(design)?[0];
                2.0 * top * top
            }
            Self::SymmetrizedColumn { .. } => 8.0,
        })
    }
}

/// Statistics of `design / sqrt(n)`.
pub fn design_stats(design: &DenseMatrix, n: usize) -> Result<DesignStats> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let s = singular_values(design)?;
    let sigma_min = if design.rows() < design.cols() { 0.0 } else { *s.last().unwrap() };
    let kappa_max = design.column_norms().into_iter().fold(0.0, f64::max);
    Ok(DesignStats {
        sigma_min: sigma_min * scale,
        sigma_max: s[0] * scale,
        kappa_max: kappa_max * scale,
    })
}
