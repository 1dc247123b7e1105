//! Running configured suites and writing their reports.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{suites, Provenance, SweepResult, VerificationReport};

pub use config::{parse_config, Format, GridConfig, SlabConfig, SuiteConfig, SweepConfig, Thresholds, MAX_M, MAX_N};

/// Descriptive names shown by `list`.
pub fn describe(id: &str) -> &'static str {
    match id {
        "adams-2.1" => "Adams-type bound for b I_alpha f",
        "sharp-max-2.2" => "sharp function of I_alpha g against M_alpha g",
        "weighted-2.3" => "weighted estimates with a homogeneous Morrey weight",
        "hardy-2.4" => "Hardy inequality and its sharp constant",
        "truncated-2.6" => "truncated Morrey quantity of the weight",
        "weighted-2.8" => "weighted estimate with a truncated Morrey weight",
        "counterexample-2.9" => "counterexample family u_kappa with b = 1/|x|",
        "trace-3.5" => "L_r trace estimate, global form",
        "trace-local-3.5c" => "L_r trace estimate, local form",
        "tail-3.6" => "parabolic tail potential against M_beta",
        "trace-morrey-3.2" => "Morrey trace estimate with exponent mu",
        "trace-morrey-3.3" => "Morrey trace estimate at mu = 2 via E^{1,2}",
        "trace-remark-3.4" => "Morrey trace estimate with E_{p,beta} on the left",
        _ => "unknown",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub reports: Vec<SummaryEntry>,
    pub all_pass: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub inequality_id: String,
    pub pass: bool,
    pub empirical_constant: Option<f64>,
    pub scale_drift: Option<f64>,
    pub cases: usize,
    pub excluded: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

pub fn provenance(cfg: &SuiteConfig) -> Provenance {
    Provenance { seed: cfg.seed, config_hash: cfg.hash(), version: env!("CARGO_PKG_VERSION").into() }
}

/// Runs one suite; an error becomes a failing report carrying the reason.
pub fn run_one(id: &str, cfg: &SuiteConfig) -> VerificationReport {
    match suites::run(id, cfg) {
        Ok(r) => r,
        Err(e) => VerificationReport {
            inequality_id: id.into(),
            params: serde_json::json!({}),
            cases: vec![],
            empirical_constant: None,
            scale_drift: None,
            excluded: vec![],
            pass: false,
            provenance: provenance(cfg),
            reason: Some(e.to_string()),
        },
    }
}

/// Runs every configured suite in order, writing reports as it goes and
/// `summary.json` last.
pub fn run_suite(cfg: &SuiteConfig) -> Result<(Vec<VerificationReport>, RunSummary)> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut reports = Vec::new();
    for id in &cfg.ids {
        let report = run_one(id, cfg);
        emit_report(&report, &cfg.output_dir, &cfg.formats)?;
        if let Some(sweep) = report.params.get("sweep") {
            let sweep: SweepResult = serde_json::from_value(sweep.clone()).map_err(|e| Error::Io(e.to_string()))?;
            write_sweep_csv(&sweep, &cfg.output_dir.join(format!("{id}-sweep.csv")))?;
            let text = serde_json::to_string_pretty(&sweep).map_err(|e| Error::Io(e.to_string()))?;
            fs::write(cfg.output_dir.join(format!("{id}-sweep.json")), text)?;
        }
        reports.push(report);
    }
    let summary = RunSummary {
        reports: reports
            .iter()
            .map(|r| SummaryEntry {
                inequality_id: r.inequality_id.clone(),
                pass: r.pass,
                empirical_constant: r.empirical_constant,
                scale_drift: r.scale_drift,
                cases: r.cases.len(),
                excluded: r.excluded.len(),
                reason: r.reason.clone(),
            })
            .collect(),
        all_pass: reports.iter().all(|r| r.pass),
        provenance: provenance(cfg),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(cfg.output_dir.join("summary.json"), text)?;
    Ok((reports, summary))
}

/// Writes `<id>.json` and/or `<id>.csv` under `dir`; returns the paths.
pub fn emit_report(report: &VerificationReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for f in formats {
        match f {
            Format::Json => {
                let path = dir.join(format!("{}.json", report.inequality_id));
                let text = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
                fs::write(&path, text)?;
                out.push(path);
            }
            Format::Csv => {
                let path = dir.join(format!("{}.csv", report.inequality_id));
                let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.to_string()))?;
                w.write_record(["case_id", "scale_index", "lhs", "rhs", "ratio"]).map_err(|e| Error::Io(e.to_string()))?;
                for c in &report.cases {
                    w.write_record([
                        c.case_id.clone(),
                        c.scale_index.to_string(),
                        format!("{:e}", c.lhs),
                        format!("{:e}", c.rhs),
                        format!("{:e}", c.ratio),
                    ])
                    .map_err(|e| Error::Io(e.to_string()))?;
                }
                w.flush()?;
                out.push(path);
            }
        }
    }
    Ok(out)
}

pub fn read_report(path: &Path) -> Result<VerificationReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))
}

/// Log-log plot data of the counterexample sweep.
pub fn write_sweep_csv(sweep: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["kappa", "ln_kappa", "norm_bdu", "norm_d2u", "norm_u", "ln_norm_bdu", "ln_norm_d2u"]).map_err(io)?;
    for (i, k) in sweep.kappa.iter().enumerate() {
        let (a, b, c) = (sweep.norm_bdu[i], sweep.norm_d2u[i], sweep.norm_u[i]);
        w.write_record([k, &k.ln(), &a, &b, &c, &a.ln(), &b.ln()].map(|v| format!("{v:e}"))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
