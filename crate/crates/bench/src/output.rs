//! CSV and gnuplot emission of sweep results.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use matdecomp::{Error, Result};

use crate::fit::group_means;
use crate::sweep::ResultRow;

pub const CSV_HEADER: [&str; 19] = [
    "experiment",
    "grid_value",
    "trial",
    "seed",
    "d1",
    "d2",
    "r",
    "s",
    "lambda",
    "mu",
    "alpha",
    "e_squared",
    "predicted_rate",
    "iterations",
    "converged",
    "wall_time_ms",
    "estimator",
    "kind",
    "inv_e_squared",
];

/// Decimal rendering rounded to 12 significant digits.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn record(row: &ResultRow) -> [String; 19] {
    [
        row.experiment.id().to_owned(),
        sig12(row.grid_value),
        row.trial.to_string(),
        row.seed.to_string(),
        row.d1.to_string(),
        row.d2.to_string(),
        row.r.to_string(),
        row.s.to_string(),
        sig12(row.lambda),
        sig12(row.mu),
        sig12(row.alpha),
        sig12(row.e_squared),
        sig12(row.predicted_rate),
        row.iterations.to_string(),
        row.converged.to_string(),
        sig12(row.wall_time_ms),
        row.estimator.to_owned(),
        row.kind.name().to_owned(),
        sig12(row.inv_e_squared()),
    ]
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes rows as CSV with a header line to any writer.
pub fn write_csv(rows: &[ResultRow], out: impl Write) -> Result<()> {
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.experiment != first.experiment) {
            return Err(Error::InvalidParameter {
                name: "rows",
                reason: "rows of one CSV must share an experiment id".into(),
            });
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record(record(row)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, csv_string(rows)?)?;
    Ok(())
}

/// Per-grid-point means as gnuplot data blocks, one block per (estimator, kind, r, s)
/// series where that series varies along the grid.
pub fn gnuplot_data(rows: &[ResultRow]) -> String {
    let mut series: BTreeMap<(&str, &str, usize, usize), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        // Rank and sparsity are grid-derived in the rank and sparsity sweeps; keep those series whole.
        let key = match row.experiment {
            crate::sweep::Experiment::RankSweep => (row.estimator, row.kind.name(), 0, row.s),
            crate::sweep::Experiment::SparsitySweep => (row.estimator, row.kind.name(), row.r, 0),
            crate::sweep::Experiment::DimensionSweep => (row.estimator, row.kind.name(), row.r, 0),
            _ => (row.estimator, row.kind.name(), row.r, row.s),
        };
        series.entry(key).or_default().push(row);
    }
    let mut out = String::new();
    for (i, ((estimator, kind, r, s), members)) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# estimator={estimator} kind={kind} r={r} s={s}\n"));
        out.push_str("# grid_value mean_e_squared mean_inv_e_squared mean_predicted_rate\n");
        let e2 = group_means(members, |r| r.grid_value, |r| r.e_squared);
        let inv = group_means(members, |r| r.grid_value, |r| r.inv_e_squared());
        let pred = group_means(members, |r| r.grid_value, |r| r.predicted_rate);
        for ((g, a), ((_, b), (_, c))) in e2.iter().zip(inv.iter().zip(&pred)) {
            out.push_str(&format!("{} {} {} {}\n", sig12(*g), sig12(*a), sig12(*b), sig12(*c)));
        }
    }
    out
}
