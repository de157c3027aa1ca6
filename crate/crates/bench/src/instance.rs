//! Replayable identity-operator instances and their on-disk layout.
//!
//! An instance directory holds `theta_star.txt`, `gamma_star.txt`, `y.txt`,
//! `support.csv` and `manifest.txt`. A solve adds `theta_hat.txt`,
//! `gamma_hat.txt` and `diagnostics.txt`.

use std::fs;
use std::path::Path;

use matdecomp::reg::{PenaltyParams, RegularizerKind};
use matdecomp::solver::DecompositionEstimate;
use matdecomp::synth::{self, noise_seed, GroundTruth, RngSeed};
use matdecomp::{tuning, DenseMatrix, KvRecord, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.txt";

/// Everything needed to regenerate an instance bit for bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Manifest {
    pub kind: RegularizerKind,
    pub d1: usize,
    pub d2: usize,
    pub r: usize,
    pub s: usize,
    pub alpha: f64,
    pub magnitude: f64,
    pub nu: f64,
    pub seed: RngSeed,
}

impl Manifest {
    pub fn to_record(&self) -> KvRecord {
        let mut rec = KvRecord::new();
        rec.set("kind", self.kind.name())
            .set("d1", self.d1)
            .set("d2", self.d2)
            .set("r", self.r)
            .set("s", self.s)
            .set("alpha", self.alpha)
            .set("magnitude", self.magnitude)
            .set("nu", self.nu)
            .set("seed", self.seed.0);
        rec
    }

    pub fn from_record(rec: &KvRecord) -> Result<Self> {
        Ok(Self {
            kind: rec.parse("kind")?,
            d1: rec.parse("d1")?,
            d2: rec.parse("d2")?,
            r: rec.parse("r")?,
            s: rec.parse("s")?,
            alpha: rec.parse("alpha")?,
            magnitude: rec.parse("magnitude")?,
            nu: rec.parse("nu")?,
            seed: RngSeed(rec.parse("seed")?),
        })
    }

    pub fn truth(&self) -> Result<GroundTruth> {
        synth::gen_ground_truth(self.kind, self.d1, self.d2, self.r, self.s, self.alpha, self.magnitude, self.seed)
    }

    /// `Y = theta* + gamma* + W` with `W` drawn from the instance's noise stream.
    pub fn observe(&self, truth: &GroundTruth) -> Result<DenseMatrix> {
        let w = synth::gen_gaussian_noise(self.d1, self.d2, self.nu, noise_seed(self.seed))?;
        Ok(&(&truth.theta_star + &truth.gamma_star) + &w)
    }

    pub fn generate(&self) -> Result<(GroundTruth, DenseMatrix)> {
        let truth = self.truth()?;
        let y = self.observe(&truth)?;
        Ok((truth, y))
    }

    /// Gaussian-noise parameter rule for the instance's regularizer.
    pub fn default_params(&self, paper_literal: bool) -> Result<PenaltyParams> {
        match self.kind {
            RegularizerKind::ElementwiseL1 => tuning::params_sparse_gaussian(self.nu, self.d1, self.d2, self.alpha),
            RegularizerKind::Columnwise21 => {
                tuning::params_col_gaussian(self.nu, self.d1, self.d2, self.alpha, paper_literal)
            }
        }
    }
}

pub fn write_instance(dir: &Path, manifest: &Manifest, truth: &GroundTruth, y: &DenseMatrix) -> Result<()> {
    fs::create_dir_all(dir)?;
    truth.theta_star.write_file(dir.join("theta_star.txt"))?;
    truth.gamma_star.write_file(dir.join("gamma_star.txt"))?;
    y.write_file(dir.join("y.txt"))?;
    fs::write(dir.join("support.csv"), truth.support.to_csv())?;
    manifest.to_record().write_file(dir.join(MANIFEST_FILE))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    Manifest::from_record(&KvRecord::read_file(dir.join(MANIFEST_FILE))?)
}

pub fn read_observation(dir: &Path) -> Result<DenseMatrix> {
    DenseMatrix::read_file(dir.join("y.txt"))
}

/// Diagnostics record of a solve.
pub fn diagnostics(est: &DecompositionEstimate, params: &PenaltyParams, estimator: &str) -> KvRecord {
    let mut rec = KvRecord::new();
    rec.set("estimator", estimator)
        .set("lambda", params.lambda)
        .set("mu", params.mu)
        .set("alpha", params.alpha)
        .set("iterations", est.iterations)
        .set("final_objective", est.final_objective())
        .set("feasibility_residual", est.feasibility_residual)
        .set("converged", est.converged)
        .set("inexact_prox_steps", est.inexact_prox_steps);
    if let Some(fp) = est.fixed_point_residual {
        rec.set("fixed_point_residual", fp);
    }
    rec
}

pub fn write_estimate(dir: &Path, est: &DecompositionEstimate, record: &KvRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    est.theta_hat.write_file(dir.join("theta_hat.txt"))?;
    est.gamma_hat.write_file(dir.join("gamma_hat.txt"))?;
    record.write_file(dir.join(DIAGNOSTICS_FILE))
}

pub fn read_estimate(dir: &Path) -> Result<(DenseMatrix, DenseMatrix)> {
    Ok((
        DenseMatrix::read_file(dir.join("theta_hat.txt"))?,
        DenseMatrix::read_file(dir.join("gamma_hat.txt"))?,
    ))
}
