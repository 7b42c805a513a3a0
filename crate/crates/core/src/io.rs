//! CSV and JSON artifacts. Numbers are written in Rust's shortest
//! round-trip form, so every file parses back to the same `f64` values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::RarefactionCurve;
use crate::error::{Result, TrafficError};
use crate::field::MacroField;
use crate::micro::MicroState;
use crate::particle::ParticleEnsemble;
use crate::uq::convergence::ConvergenceRow;
use crate::uq::stats::{CellStats, StatSummary};

pub const FIELD_HEADER: &str = "x,rho,h";
pub const SUMMARY_HEADER: &str =
    "x,rho_mean,rho_median,rho_q05,rho_q95,h_mean,h_median,h_q05,h_q95";
pub const CONVERGENCE_HEADER: &str = "n,l2_rho,l2_h";
pub const TRAJECTORY_HEADER: &str = "t,i,x_i";
pub const ENSEMBLE_HEADER: &str = "t,X,S";
pub const CURVE_HEADER: &str = "sigma,rho,h,c,lambda";

/// A numeric table with a header line.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TrafficError::Config(format!("no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn format_table<R: AsRef<[f64]>>(header: &str, rows: impl IntoIterator<Item = R>) -> String {
    let mut out = String::with_capacity(1 << 12);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (k, v) in row.as_ref().iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn write_table<R: AsRef<[f64]>>(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = R>,
) -> Result<()> {
    write_text(path, &format_table(header, rows))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| TrafficError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| TrafficError::Config("empty table".to_string()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| {
                        TrafficError::Config(format!("row {}: cannot parse `{v}`: {e}", i + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != header.len() {
                return Err(TrafficError::Config(format!(
                    "row {} has {} values, header has {}",
                    i + 1,
                    row.len(),
                    header.len()
                )));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(Table { header, rows })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)
        .map_err(|e| TrafficError::Io(format!("{}: {e}", path.display())))?;
    parse_table(&text)
}

fn expect_header(table: &Table, header: &str) -> Result<()> {
    if table.header.join(",") != header {
        return Err(TrafficError::Config(format!(
            "expected header `{header}`, found `{}`",
            table.header.join(",")
        )));
    }
    Ok(())
}

/// `fields_t<time>.csv`.
pub fn field_file_name(t: f64) -> String {
    format!("fields_t{t}.csv")
}

pub fn field_csv(field: &MacroField) -> String {
    let x = field.grid.centers();
    format_table(
        FIELD_HEADER,
        (0..x.len()).map(|i| [x[i], field.rho[i], field.h[i]]),
    )
}

pub fn write_field_csv(path: &Path, field: &MacroField) -> Result<()> {
    write_text(path, &field_csv(field))
}

/// Columns `(x, rho, h)` of a field file.
pub fn read_field_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let t = read_table(path)?;
    expect_header(&t, FIELD_HEADER)?;
    Ok((t.column("x")?, t.column("rho")?, t.column("h")?))
}

pub fn summary_csv(s: &StatSummary) -> String {
    format_table(
        SUMMARY_HEADER,
        (0..s.x.len()).map(|i| {
            [
                s.x[i],
                s.rho.mean[i],
                s.rho.median[i],
                s.rho.q05[i],
                s.rho.q95[i],
                s.h.mean[i],
                s.h.median[i],
                s.h.q05[i],
                s.h.q95[i],
            ]
        }),
    )
}

pub fn write_summary_csv(path: &Path, s: &StatSummary) -> Result<()> {
    write_text(path, &summary_csv(s))
}

/// Reads a summary; the sample count is not stored in the CSV.
pub fn read_summary_csv(path: &Path, n_samples: usize) -> Result<StatSummary> {
    let t = read_table(path)?;
    expect_header(&t, SUMMARY_HEADER)?;
    let stats = |p: &str| -> Result<CellStats> {
        Ok(CellStats {
            mean: t.column(&format!("{p}_mean"))?,
            median: t.column(&format!("{p}_median"))?,
            q05: t.column(&format!("{p}_q05"))?,
            q95: t.column(&format!("{p}_q95"))?,
        })
    };
    Ok(StatSummary {
        x: t.column("x")?,
        rho: stats("rho")?,
        h: stats("h")?,
        n_samples,
    })
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    write_table(
        path,
        CONVERGENCE_HEADER,
        rows.iter().map(|r| [r.n as f64, r.l2_rho, r.l2_h]),
    )
}

pub fn read_convergence_csv(path: &Path) -> Result<Vec<ConvergenceRow>> {
    let t = read_table(path)?;
    expect_header(&t, CONVERGENCE_HEADER)?;
    Ok(t.rows
        .iter()
        .map(|r| ConvergenceRow {
            n: r[0] as usize,
            l2_rho: r[1],
            l2_h: r[2],
        })
        .collect())
}

/// Rows `t, i, x_i` for each recorded micro state.
pub fn trajectory_csv(states: &[(f64, &MicroState)]) -> String {
    format_table(
        TRAJECTORY_HEADER,
        states.iter().flat_map(|(t, s)| {
            s.positions
                .iter()
                .enumerate()
                .map(move |(i, &x)| [*t, i as f64, x])
        }),
    )
}

pub fn ensemble_csv(ensembles: &[(f64, &ParticleEnsemble)]) -> String {
    format_table(
        ENSEMBLE_HEADER,
        ensembles
            .iter()
            .flat_map(|(t, e)| e.x.iter().zip(&e.s).map(move |(&x, &s)| [*t, x, s])),
    )
}

pub fn curve_csv(curve: &RarefactionCurve) -> String {
    format_table(
        CURVE_HEADER,
        curve
            .points
            .iter()
            .map(|p| [p.sigma, p.state.rho, p.state.h, p.state.c, p.lambda]),
    )
}

/// Metadata written next to the field files of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model: String,
    pub scheme: String,
    pub dx: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// `|M(T) - M(0)| / M(0)` of the density.
    pub mass_drift: f64,
    pub output_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serialisable value");
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| TrafficError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| TrafficError::Config(e.to_string()))
}
