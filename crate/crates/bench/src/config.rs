//! INI-style configuration files and sweep overrides.
//!
//! A config file holds `key = value` lines whose keys are the long flag names
//! of the CLI (with `-` or `_`). `[section]` headers and `#`/`;` comments are
//! ignored. Values are spliced in front of the command-line flags, so flags
//! given explicitly win.

use std::path::{Path, PathBuf};

use clap::Args;
use matdecomp::solver::{SolverConfig, StepRule};
use matdecomp::synth::RngSeed;
use matdecomp::tuning::NoiseModel;
use matdecomp::{Error, KvRecord, Result};

use crate::sweep::{Experiment, SweepSpec};

/// Parses config text, dropping section headers.
pub fn parse_config(text: &str) -> Result<KvRecord> {
    let body: String = text
        .lines()
        .map(|line| {
            let t = line.trim();
            if t.starts_with('[') && t.ends_with(']') {
                ""
            } else {
                line
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    KvRecord::from_text(&body)
}

pub fn read_config(path: &Path) -> Result<KvRecord> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Turns config entries into long-flag arguments. Boolean `true` becomes a
/// bare flag and `false` is dropped.
pub fn config_args(rec: &KvRecord) -> Vec<String> {
    let mut out = Vec::new();
    for (key, value) in rec.iter() {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            "true" => out.push(flag),
            "false" => {}
            _ => {
                out.push(flag);
                out.push(value.to_owned());
            }
        }
    }
    out
}

/// Splices the file named by `--config` (if any) right after the subcommand.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            let value = it.next().ok_or_else(|| Error::invalid("config", "missing file name"))?;
            path = Some(PathBuf::from(value));
        } else if let Some(value) = arg.strip_prefix("--config=") {
            path = Some(PathBuf::from(value));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let extra = config_args(&read_config(&path)?);
    // Program name and subcommand stay in front.
    let split = rest.len().min(2);
    let mut out: Vec<String> = rest[..split].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[split..]);
    Ok(out)
}

fn parse_case(text: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = text.split_once(':').ok_or_else(|| format!("expected a:b, got `{text}`"))?;
    let a = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    Ok((a, b))
}

/// Solver settings shared by every command that solves.
#[derive(Args, Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverKnobs {
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub dykstra_iters: Option<usize>,
    /// Backtracking line search instead of the fixed `1/L` step.
    #[arg(long)]
    pub backtracking: bool,
}

impl SolverKnobs {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.dykstra_iters {
            cfg.dykstra_iters = v;
        }
        if self.backtracking {
            cfg.step_rule = StepRule::Backtracking;
        }
    }
}

/// Optional replacements for the default design of a sweep.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct SweepOverrides {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Noise level; 0 disables noise.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Comma-separated ranks of the dimension sweep.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    /// Comma-separated `a:b` pairs: `(d, s)` for bad pairs, `(r, s)` for the rate band.
    #[arg(long, value_delimiter = ',', value_parser = parse_case)]
    pub cases: Option<Vec<(usize, usize)>>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    #[command(flatten)]
    pub solver: SolverKnobs,
    /// Columnwise rule with the printed `mu` (no noise factor).
    #[arg(long)]
    pub paper_literal: bool,
    /// Write `wall_time_ms` as 0 so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

impl SweepOverrides {
    pub fn apply(&self, spec: &mut SweepSpec) {
        let st = &mut spec.settings;
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = self.seed {
            spec.base_seed = RngSeed(v);
        }
        if let Some(v) = &self.grid {
            spec.grid = v.clone();
        }
        if let Some(v) = self.alpha {
            st.alpha = v;
        }
        if let Some(nu) = self.nu {
            spec.noise = if nu > 0.0 { NoiseModel::Gaussian { nu } } else { NoiseModel::None };
        }
        if let Some(v) = self.d {
            st.d = v;
        }
        if let Some(v) = self.rank {
            st.rank = v;
        }
        if let Some(v) = self.sparsity {
            st.sparsity = v;
        }
        if let Some(v) = &self.ranks {
            st.ranks = v.clone();
        }
        if let Some(v) = &self.cases {
            st.cases = v.clone();
            if spec.experiment == Experiment::BadpairCheck && self.grid.is_none() {
                spec.grid = v.iter().map(|&(d, _)| d as f64).collect();
            }
        }
        if let Some(v) = self.magnitude {
            st.magnitude = v;
        }
        self.solver.apply(&mut st.solver);
        st.paper_literal |= self.paper_literal;
        if self.no_timing {
            spec.record_timing = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments_are_skipped() {
        let rec = parse_config("[sweep]\ntrials = 3\n# note\nno_timing = true\n; more\ngrid = 0.1,0.2\n").unwrap();
        assert_eq!(rec.get("trials"), Some("3"));
        assert_eq!(
            config_args(&rec),
            ["--trials", "3", "--no-timing", "--grid", "0.1,0.2"].map(String::from).to_vec()
        );
    }

    #[test]
    fn false_booleans_are_dropped() {
        let rec = parse_config("backtracking = false\n").unwrap();
        assert!(config_args(&rec).is_empty());
    }

    #[test]
    fn malformed_line_is_an_error() {
        assert!(parse_config("[a]\njust words\n").is_err());
    }

    #[test]
    fn overrides_touch_only_given_fields() {
        let base = SweepSpec::defaults(Experiment::SparsitySweep);
        let mut spec = base.clone();
        SweepOverrides::default().apply(&mut spec);
        assert_eq!(spec, base);

        let o = SweepOverrides {
            trials: Some(2),
            nu: Some(0.0),
            grid: Some(vec![0.5]),
            no_timing: true,
            ..Default::default()
        };
        o.apply(&mut spec);
        assert_eq!(spec.trials, 2);
        assert_eq!(spec.noise, NoiseModel::None);
        assert_eq!(spec.grid, vec![0.5]);
        assert!(!spec.record_timing);
        assert_eq!(spec.settings, base.settings);
    }

    #[test]
    fn cases_parse_pairs() {
        assert_eq!(parse_case("50:10"), Ok((50, 10)));
        assert!(parse_case("50").is_err());
    }
}
