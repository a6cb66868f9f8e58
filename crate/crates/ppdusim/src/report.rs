//! Figure-ready export of run results: CSV tables for plotting and JSON
//! documents that pin down provenance.
//!
//! All builders produce their bytes fully in memory, so identical inputs
//! yield byte-identical artifacts; file writing goes through a
//! write-then-rename so readers never observe a half-written file.
//!
//! Column layouts and units are documented in `docs/metrics-schema.md` at
//! the repository root.

use crate::config::ExperimentConfig;
use crate::engine::{RunMeta, RunReport, SearchReport};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

// --- CSV builders ---------------------------------------------------------

/// One row per report, headline group only: the policy, its weight, and
/// the converged averages. Users appear as numbered column families.
pub fn metrics_csv(reports: &[RunReport]) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let users = reports
        .first()
        .map_or(0, |r| r.headline().avg_f.len());
    let mut header: Vec<String> = vec![
        "policy".into(),
        "v".into(),
        "avg_h_tot_ms".into(),
        "avg_ts_ms".into(),
    ];
    header.extend((1..=users).map(|k| format!("avg_f_{k}")));
    header.extend((1..=users).map(|k| format!("avg_e_mj_{k}")));
    header.extend([
        "avg_s_tot".into(),
        "fairness_satisfied".into(),
        "energy_satisfied".into(),
    ]);
    writer.write_record(&header)?;
    for report in reports {
        let m = report.headline();
        let mut row: Vec<String> = vec![
            report.meta.policy.clone(),
            report.meta.v.map_or_else(String::new, |v| v.to_string()),
            m.avg_h_tot_ms.to_string(),
            m.avg_ts_ms.to_string(),
        ];
        row.extend(m.avg_f.iter().map(|v| v.to_string()));
        row.extend(m.avg_e_mj.iter().map(|v| v.to_string()));
        row.extend([
            m.avg_s_tot.to_string(),
            m.fairness_satisfied.to_string(),
            m.energy_satisfied.to_string(),
        ]);
        writer.write_record(&row)?;
    }
    finish_csv(writer)
}

/// Group 1's sampled trajectory: chosen duration and virtual-queue totals.
pub fn traces_csv(report: &RunReport) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["slot", "group_slot", "ts_ms", "fairness_vq_sum", "energy_vq_sum"])?;
    for point in &report.trace {
        writer.write_record(&[
            point.slot.to_string(),
            point.group_slot.to_string(),
            point.ts_ms.to_string(),
            point.fairness_vq_sum.to_string(),
            point.energy_vq_sum.to_string(),
        ])?;
    }
    finish_csv(writer)
}

/// One row per searched fixed duration, in grid order.
pub fn candidates_csv(search: &SearchReport) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let users = search
        .candidates
        .first()
        .map_or(0, |c| c.metrics.avg_f.len());
    let mut header: Vec<String> = vec![
        "ts_ms".into(),
        "feasible".into(),
        "selected".into(),
        "avg_h_tot_ms".into(),
    ];
    header.extend((1..=users).map(|k| format!("avg_f_{k}")));
    header.extend((1..=users).map(|k| format!("avg_e_mj_{k}")));
    header.push("avg_s_tot".into());
    writer.write_record(&header)?;
    let selected = search.best.as_ref().map(|b| b.ts_ms);
    for candidate in &search.candidates {
        let m = &candidate.metrics;
        let mut row: Vec<String> = vec![
            candidate.ts_ms.to_string(),
            candidate.feasible.to_string(),
            (selected == Some(candidate.ts_ms)).to_string(),
            m.avg_h_tot_ms.to_string(),
        ];
        row.extend(m.avg_f.iter().map(|v| v.to_string()));
        row.extend(m.avg_e_mj.iter().map(|v| v.to_string()));
        row.push(m.avg_s_tot.to_string());
        writer.write_record(&row)?;
    }
    finish_csv(writer)
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String, ReportError> {
    let bytes = writer.into_inner().expect("csv buffer flushes infallibly");
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

// --- JSON documents -----------------------------------------------------------

#[derive(Serialize)]
struct RunDocument<'a> {
    config: &'a ExperimentConfig,
    meta: &'a RunMeta,
    groups: &'a [crate::engine::GroupMetrics],
}

/// Full provenance of a single run: the resolved config echoed verbatim,
/// run metadata, and every group's metrics. Traces stay in their CSV.
pub fn run_json(config: &ExperimentConfig, report: &RunReport) -> Result<String, ReportError> {
    let doc = RunDocument {
        config,
        meta: &report.meta,
        groups: &report.groups,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    config: &'a ExperimentConfig,
    runs: Vec<RunDocumentInner<'a>>,
}

#[derive(Serialize)]
struct RunDocumentInner<'a> {
    meta: &'a RunMeta,
    groups: &'a [crate::engine::GroupMetrics],
}

/// Provenance of a weight sweep: shared config plus one entry per point.
pub fn sweep_json(
    config: &ExperimentConfig,
    reports: &[RunReport],
) -> Result<String, ReportError> {
    let doc = SweepDocument {
        config,
        runs: reports
            .iter()
            .map(|r| RunDocumentInner {
                meta: &r.meta,
                groups: &r.groups,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[derive(Serialize)]
struct SearchDocument<'a> {
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    search: &'a SearchReport,
}

/// Provenance and outcome of a fixed-duration search, including every
/// candidate's metrics.
pub fn search_json(
    config: &ExperimentConfig,
    search: &SearchReport,
) -> Result<String, ReportError> {
    let doc = SearchDocument { config, search };
    Ok(serde_json::to_string_pretty(&doc)?)
}

// --- file writing -----------------------------------------------------------------

/// Writes `bytes` to `path` via a sibling temp file and an atomic rename,
/// so a crash mid-write never leaves a truncated artifact. Creates parent
/// directories as needed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let describe = |source: std::io::Error| ReportError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(describe)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut file = std::fs::File::create(&tmp).map_err(describe)?;
        file.write_all(bytes).map_err(describe)?;
        file.sync_all().map_err(describe)?;
    }
    std::fs::rename(&tmp, path).map_err(describe)
}

// --- tests -----------------------------------------------------------------
