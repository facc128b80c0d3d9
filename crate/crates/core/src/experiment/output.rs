use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ConfigFile;
use super::runner::{ExperimentOutcome, RunResult};
use super::{ExperimentError, SOFTWARE_NAME, SOFTWARE_VERSION};

pub const CSV_HEADER: &str = "symbol_index,tx_symbol,re,im,clamp_count";
const SVG_SIZE: f64 = 480.0;
const SVG_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub label: String,
    pub seed: u64,
    pub n_s: f64,
    pub cspr_db: f64,
    pub decision_index: usize,
    pub clamp_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub config: ConfigFile,
    pub runs: Vec<ManifestRun>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<ManifestFile>,
}

/// Creates `dir` if needed and checks that files can be written into it.
pub fn ensure_writable(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let probe = dir.join(".kkq-write-probe");
    fs::write(&probe, b"").map_err(|e| ExperimentError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| ExperimentError::io(&probe, e))?;
    Ok(())
}

/// Constellation rows of one run, in symbol order.
pub fn constellation_csv(run: &RunResult) -> String {
    let mut out = String::with_capacity(48 * (run.cloud.points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, (symbol, r)) in run.cloud.points.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{}",
            symbol.index(),
            r.alpha_prime.re,
            r.alpha_prime.im,
            r.clamp_count
        )
        .expect("writing to a String");
    }
    out
}

/// Scatter plot of a constellation CSV on the square `[-half_width, half_width]^2`.
pub fn svg_from_csv(csv: &str, half_width: f64) -> Result<String, ExperimentError> {
    let mut lines = csv.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(ExperimentError::Config(
            "constellation CSV header mismatch".into(),
        ));
    }
    let scale = SVG_SIZE / (2.0 * half_width);
    let center = SVG_SIZE / 2.0;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    )
    .unwrap();
    writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    )
    .unwrap();
    writeln!(
        svg,
        r##"<line x1="0" y1="{center}" x2="{SVG_SIZE}" y2="{center}" stroke="#999999"/><line x1="{center}" y1="0" x2="{center}" y2="{SVG_SIZE}" stroke="#999999"/>"##
    )
    .unwrap();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64, ExperimentError> {
            fields
                .get(i)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| ExperimentError::Config(format!("bad CSV row {}: {line}", n + 2)))
        };
        let symbol = parse(1)? as usize;
        let (re, im) = (parse(2)?, parse(3)?);
        let x = center + re * scale;
        let y = center - im * scale;
        writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="0.8" fill="{}" fill-opacity="0.5"/>"#,
            SVG_COLORS[symbol % 4]
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn write_file(
    dir: &Path,
    name: &str,
    contents: &[u8],
    files: &mut Vec<ManifestFile>,
) -> Result<(), ExperimentError> {
    let path: PathBuf = dir.join(name);
    fs::write(&path, contents).map_err(|e| ExperimentError::io(&path, e))?;
    files.push(ManifestFile {
        file: name.to_string(),
        sha256: hex::encode(Sha256::digest(contents)),
    });
    Ok(())
}

/// Writes per-run CSVs (and SVGs when enabled), `stats.json`, `config.toml`
/// and `manifest.json` into the configured output directory.
pub fn write_outputs(
    outcome: &ExperimentOutcome,
    wall_time_seconds: f64,
) -> Result<Manifest, ExperimentError> {
    let dir = &outcome.config.out;
    ensure_writable(dir)?;
    let mut files = Vec::new();

    let max_n_s = outcome.config.n_s.iter().cloned().fold(0.0, f64::max);
    let half_width = 1.6 * max_n_s.sqrt();
    for run in &outcome.runs {
        let csv = constellation_csv(run);
        write_file(
            dir,
            &format!("{}.csv", run.spec.label),
            csv.as_bytes(),
            &mut files,
        )?;
        if outcome.config.svg {
            let svg = svg_from_csv(&csv, half_width)?;
            write_file(
                dir,
                &format!("{}.svg", run.spec.label),
                svg.as_bytes(),
                &mut files,
            )?;
        }
    }

    let mut stats = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    stats.push('\n');
    write_file(dir, "stats.json", stats.as_bytes(), &mut files)?;
    write_file(
        dir,
        "config.toml",
        outcome.config.to_toml().as_bytes(),
        &mut files,
    )?;

    let manifest = Manifest {
        software: SOFTWARE_NAME.to_string(),
        version: SOFTWARE_VERSION.to_string(),
        config: outcome.config.to_file(),
        runs: outcome
            .runs
            .iter()
            .map(|r| ManifestRun {
                label: r.spec.label.clone(),
                seed: r.spec.seed,
                n_s: r.spec.n_s,
                cspr_db: r.spec.cspr_db,
                decision_index: r.spec.grid.decision_index,
                clamp_count: r.report.clamp_count,
            })
            .collect(),
        wall_time_seconds,
        outputs: files,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| ExperimentError::io(&path, e))?;
    Ok(manifest)
}
