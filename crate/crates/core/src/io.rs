//! Output plumbing for the CLI: atomic writes, run manifests, CSV rendering
//! of the tabular reports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::criterion::CriterionReport;
use crate::error::Result;
use crate::harness::EquivalenceTable;
use crate::solver::{MonotoneReport, RegularityVerdict};

/// Write via a sibling temp file and rename, so a failed run never leaves a
/// partial output behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    let tmp_name = format!(".{file_name}.tmp{}", std::process::id());
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp_path, bytes)?;
    std::fs::rename(&tmp_path, path)?;
    Ok(())
}

/// FNV-1a hash of the raw config bytes, hex-encoded.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Reproducibility record written alongside every result file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub version: String,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_bytes: &[u8], seed: Option<u64>, workers: usize) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config_hash: config_hash(config_bytes),
            seed,
            workers,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

fn csv_cell(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn criterion_csv(report: &CriterionReport) -> String {
    let mut out = String::from("k,alpha,radius,dk,dk_stderr,dk_ci95,term,partial_sum\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k,
            csv_cell(r.alpha),
            csv_cell(r.radius),
            csv_cell(r.dk),
            csv_cell(r.dk_stderr),
            csv_cell(r.dk_ci95),
            csv_cell(r.term),
            csv_cell(r.partial_sum),
        ));
    }
    out
}

pub fn probe_csv(v: &RegularityVerdict) -> String {
    let mut out = String::from("distance,estimate,stderr,ci95\n");
    for r in &v.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_cell(r.distance),
            csv_cell(r.estimate),
            csv_cell(r.stderr),
            csv_cell(r.ci95),
        ));
    }
    out
}

pub fn monotone_csv(report: &MonotoneReport) -> String {
    let mut out = String::from("t,estimate,stderr\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_cell(r.t),
            csv_cell(r.estimate),
            csv_cell(r.stderr),
        ));
    }
    out
}

pub fn equivalence_csv(table: &EquivalenceTable) -> String {
    let mut out = String::from(
        "case,x0,t0,expected,stationary,evolution,criterion,probes_agree,forbidden\n",
    );
    for r in &table.rows {
        let x0 = r
            .x0
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{},{},{},{:?},{:?},{:?},{:?},{},{}\n",
            r.case,
            x0,
            r.t0,
            r.expected,
            r.stationary,
            r.evolution,
            r.criterion,
            r.probes_agree.map(|b| b.to_string()).unwrap_or_default(),
            r.forbidden_combination,
        ));
    }
    out
}
