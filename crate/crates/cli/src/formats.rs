//! On-disk formats: `diagnostics.csv`, raw `omega_<index>.f64` snapshots and
//! `report.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lcflow::flow::{DiagnosticsRecord, RunMetadata};
use lcflow::verify::ResidualReport;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const MAGIC: &[u8; 8] = b"LCFLOW01";
pub const HEADER_LEN: usize = 32;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

pub fn csv_header(sigmas: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = ["t", "vol", "h2_min", "h2_max", "r_min", "r_max", "a_ring_sq_max"]
        .map(String::from)
        .to_vec();
    h.extend(sigmas.iter().map(|s| format!("f_sigma_{s}")));
    h.extend(
        ["grad_h2_sq_max", "psi", "gauss_residual", "diam_lo", "diam_hi", "grad_ineq_slack"].map(String::from),
    );
    h
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Undefined entries (`f_σ` or `ψ` where `H² ≤ 0`) are left empty.
pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord<f64>], sigmas: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(csv_header(sigmas))?;
    for r in records {
        let mut row = vec![r.t, r.vol, r.h2_min, r.h2_max, r.r_min, r.r_max, r.a_ring_sq_max]
            .into_iter()
            .map(|v| cell(Some(v)))
            .collect::<Vec<_>>();
        row.extend(sigmas.iter().map(|&s| cell(r.f_sigma_for(s))));
        row.push(cell(Some(r.grad_h2_sq_max)));
        row.push(cell(r.psi));
        row.extend([r.gauss_residual, r.diam_lo, r.diam_hi, r.grad_ineq_slack].map(|v| cell(Some(v))));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl DiagnosticsTable {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Rejects files that do not end in a newline, the mark of an interrupted
/// write.
pub fn read_diagnostics_csv(path: &Path) -> Result<DiagnosticsTable, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.last() != Some(&b'\n') {
        return Err(format_err(path, "truncated: no terminal newline"));
    }
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|_| format_err(path, format!("bad number `{s}`")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(DiagnosticsTable { header, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub n_theta: usize,
    pub n_phi: usize,
    pub t: f64,
    /// Row-major `[i][j]`, `i` over `θ`.
    pub values: Vec<f64>,
}

pub fn snapshot_name(index: usize) -> String {
    format!("omega_{index:04}.f64")
}

pub fn write_snapshot(path: &Path, snap: &SnapshotFile) -> Result<(), CliError> {
    if snap.values.len() != snap.n_theta * snap.n_phi {
        return Err(format_err(path, "value count does not match the grid"));
    }
    let dim = |n: usize| u32::try_from(n).map_err(|_| format_err(path, "grid dimension exceeds u32"));
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * snap.values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&dim(snap.n_theta)?.to_le_bytes());
    buf.extend_from_slice(&dim(snap.n_phi)?.to_le_bytes());
    buf.extend_from_slice(&snap.t.to_le_bytes());
    buf.extend_from_slice(&[0u8; 8]);
    for v in &snap.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(io_err(path))
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotFile, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(format_err(path, "not an LCFLOW01 snapshot"));
    }
    let u32_at = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes")) as usize;
    let (n_theta, n_phi) = (u32_at(8), u32_at(12));
    let t = f64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let expect = HEADER_LEN + 8 * n_theta * n_phi;
    if bytes.len() != expect {
        return Err(format_err(
            path,
            format!("length {} but a {n_theta}×{n_phi} grid needs {expect}", bytes.len()),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(SnapshotFile {
        n_theta,
        n_phi,
        t,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub c: f64,
    pub a: [f64; 3],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<RunMetadata<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_record: Option<DiagnosticsRecord<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    /// Log-linear slopes (and `R²`) of decaying quantities.
    pub slopes: BTreeMap<String, f64>,
    pub reports: Vec<ResidualReport>,
    /// Checks that could not run, with the reason.
    pub errors: BTreeMap<String, String>,
    pub snapshots: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            seed: config.seed,
            meta: None,
            final_record: None,
            fit: None,
            slopes: BTreeMap::new(),
            reports: Vec::new(),
            errors: BTreeMap::new(),
            snapshots: Vec::new(),
            wall_seconds: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass) && self.errors.is_empty()
    }
}

pub fn write_report(dir: &Path, report: &Report) -> Result<PathBuf, CliError> {
    let path = dir.join("report.json");
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(path)
}
