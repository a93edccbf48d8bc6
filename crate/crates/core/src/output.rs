//! Table, manifest and plot-data files for simulation runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{RbsbError, Result};
use crate::sim::{run_scenario_with_start, Estimate, MetricTable, SimReport, SPARSE_CONDITIONING};

pub const MANIFEST_VERSION: u32 = 1;

/// Metrics in output order: (file stem, accessor).
type Accessor = fn(&SimReport) -> &MetricTable;

const METRICS: [(&str, Accessor); 5] = [
    ("marginal", |r| &r.marginal),
    ("conditional", |r| &r.conditional),
    ("joint", |r| &r.joint),
    ("ess_pct", |r| &r.ess_pct),
    ("bias", |r| &r.bias),
];

/// Six significant digits, trailing zeros trimmed; `NA` for missing.
pub fn format_sig6(x: Option<f64>) -> String {
    let Some(x) = x else { return "NA".into() };
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return "NA".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let s = if (-5..15).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    };
    if s == "-0" { "0".into() } else { s }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub reps: u64,
    pub config_sha256: String,
    pub config: RunConfig,
    pub wall_time_seconds: f64,
    pub files: Vec<String>,
}

pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(serde_json::to_vec(config).expect("config serialises"));
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| RbsbError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => RbsbError::io(path, io),
        other => RbsbError::Numeric(format!("{other:?}")),
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> RbsbError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => RbsbError::io(path, io),
        other => RbsbError::Numeric(format!("{other:?}")),
    }
}

fn write_metric_csv(path: &Path, reports: &[SimReport], metric: usize) -> Result<()> {
    let (name, get) = METRICS[metric];
    let conditional = name == "conditional";
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    let mut header = vec!["setting", "design", "stage", "value", "mc_stderr"];
    if conditional {
        header.extend(["n_conditioning", "sparse"]);
    }
    w.write_record(&header).map_err(&err)?;
    for r in reports {
        let table = get(r);
        for (d, design) in table.designs.iter().enumerate() {
            for (k, e) in table.cells[d].iter().enumerate() {
                let mut row = vec![
                    r.label.clone(),
                    design.to_string(),
                    (k + 1).to_string(),
                    format_sig6(e.value),
                    format_sig6(e.mc_stderr),
                ];
                if conditional {
                    row.push(e.n.to_string());
                    row.push(e.is_sparse().to_string());
                }
                w.write_record(&row).map_err(&err)?;
            }
        }
    }
    w.flush().map_err(|e| RbsbError::io(path, e))
}

fn pct(e: &Estimate, scale: f64, decimals: usize) -> String {
    match e.value {
        Some(v) => format!("{:.decimals$}", v * scale),
        None => "NA".into(),
    }
}

/// One Markdown table per metric, rows by setting and design.
pub fn markdown_tables(reports: &[SimReport]) -> String {
    let mut md = String::new();
    for (name, get) in METRICS {
        let (scale, decimals, unit) = if name == "bias" { (1.0, 2, "") } else { (100.0, 1, " (%)") };
        let _ = writeln!(md, "## {name}{unit}\n");
        let stages = reports.first().map_or(0, |r| r.num_stages);
        let _ = write!(md, "| Setting | Design |");
        for k in 1..=stages {
            let _ = write!(md, " k={k} |");
        }
        let _ = writeln!(md);
        let _ = writeln!(md, "|---|---|{}", "---|".repeat(stages));
        for r in reports {
            let table = get(r);
            for (d, design) in table.designs.iter().enumerate() {
                let _ = write!(md, "| {} | {design} |", r.label);
                for e in &table.cells[d] {
                    let flag = if name == "conditional" && e.value.is_some() && e.is_sparse() { "*" } else { "" };
                    let _ = write!(md, " {}{flag} |", pct(e, scale, decimals));
                }
                let _ = writeln!(md);
            }
        }
        if name == "conditional" {
            let _ = writeln!(md, "\n\\* fewer than {SPARSE_CONDITIONING} replicates in the conditioning set.");
        }
        let _ = writeln!(md);
    }
    md
}

/// Long-format plot data, one file per metric: `fig_<metric>.csv`.
pub fn emit_plot_data(reports: &[SimReport], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| RbsbError::io(dir, e))?;
    let mut files = Vec::new();
    for (name, get) in METRICS {
        let path = dir.join(format!("fig_{name}.csv"));
        let mut w = csv_writer(&path)?;
        let err = csv_err(&path);
        w.write_record(["setting", "design", "stage", "metric", "value", "stderr"]).map_err(&err)?;
        for r in reports {
            let table = get(r);
            for (d, design) in table.designs.iter().enumerate() {
                for (k, e) in table.cells[d].iter().enumerate() {
                    w.write_record([
                        r.label.as_str(),
                        design.as_str(),
                        &(k + 1).to_string(),
                        name,
                        &format_sig6(e.value),
                        &format_sig6(e.mc_stderr),
                    ])
                    .map_err(&err)?;
                }
            }
        }
        w.flush().map_err(|e| RbsbError::io(&path, e))?;
        drop(err);
        files.push(path);
    }
    Ok(files)
}

pub struct SimulateOutcome {
    pub reports: Vec<SimReport>,
    pub files: Vec<PathBuf>,
    pub manifest: RunManifest,
}

/// Run every scenario of `config` and write the requested outputs into
/// `config.output_dir`.
pub fn run_simulate(config: &RunConfig) -> Result<SimulateOutcome> {
    config.validate()?;
    let started = Instant::now();
    let reports = config
        .scenarios
        .iter()
        .map(|sc| {
            log::info!("simulating {} ({} replicates)", sc.label, config.reps);
            run_scenario_with_start(
                sc,
                &config.designs,
                &config.programme,
                config.reps,
                config.seed,
                config.conditional_start,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| RbsbError::io(dir, e))?;
    let mut files = Vec::new();
    if config.output_formats.contains(&OutputFormat::Csv) {
        for (i, (name, _)) in METRICS.iter().enumerate() {
            let path = dir.join(format!("{name}.csv"));
            write_metric_csv(&path, &reports, i)?;
            files.push(path);
        }
    }
    if config.output_formats.contains(&OutputFormat::Markdown) {
        let path = dir.join("tables.md");
        write_file(&path, markdown_tables(&reports).as_bytes())?;
        files.push(path);
    }
    if config.output_formats.contains(&OutputFormat::Json) {
        let path = dir.join("report.json");
        let json = serde_json::to_string_pretty(&reports).expect("report serialises");
        write_file(&path, json.as_bytes())?;
        files.push(path);
    }

    let manifest = RunManifest {
        manifest_version: MANIFEST_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        reps: config.reps,
        config_sha256: config_hash(config),
        config: config.clone(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = dir.join("manifest.json");
    write_file(&path, serde_json::to_string_pretty(&manifest).expect("manifest serialises").as_bytes())?;
    files.push(path);
    Ok(SimulateOutcome { reports, files, manifest })
}

pub fn read_reports(path: &Path) -> Result<Vec<SimReport>> {
    let text = fs::read_to_string(path).map_err(|e| RbsbError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| RbsbError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(Some(0.026)), "0.026");
        assert_eq!(format_sig6(Some(0.123456789)), "0.123457");
        assert_eq!(format_sig6(Some(123.456789)), "123.457");
        assert_eq!(format_sig6(Some(-0.0015894)), "-0.0015894");
        assert_eq!(format_sig6(Some(1.0)), "1");
        assert_eq!(format_sig6(Some(0.0)), "0");
        assert_eq!(format_sig6(Some(1.234e-9)), "1.23400e-9");
        assert_eq!(format_sig6(None), "NA");
    }

    #[test]
    fn hash_is_stable_hex() {
        let h = config_hash(&RunConfig::default());
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&RunConfig::default()));
        let other = RunConfig { seed: 1, ..RunConfig::default() };
        assert_ne!(h, config_hash(&other));
    }
}
