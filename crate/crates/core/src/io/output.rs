// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::RunConfig;
use super::run::{run_experiment, RunOutput};
use crate::error::{Error, Result};
use crate::protocols::ExperimentResult;
use crate::readout::write_trace_csv;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Wide table: the x column, every series, then `stderr_<series>`.
pub fn results_csv<W: Write>(res: &ExperimentResult, out: W, path: &Path) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![res.x_label.clone()];
    header.extend(res.series.iter().map(|s| s.name.clone()));
    header.extend(res.series.iter().map(|s| format!("stderr_{}", s.name)));
    w.write_record(&header).map_err(&err)?;
    for (k, x) in res.x_grid.iter().enumerate() {
        let mut row = vec![num(*x)];
        row.extend(res.series.iter().map(|s| num(s.values[k])));
        row.extend(res.series.iter().map(|s| num(s.stderr[k])));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Long table with one row per (series, x) pair.
pub fn long_csv<W: Write>(res: &ExperimentResult, out: W, path: &Path) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", res.x_label.as_str(), "value", "stderr"]).map_err(&err)?;
    for s in &res.series {
        for (k, x) in res.x_grid.iter().enumerate() {
            w.write_record([s.name.clone(), num(*x), num(s.values[k]), num(s.stderr[k])])
                .map_err(&err)?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Run metadata: config hash, seed, versions, scalars, fits and notes.
pub fn metadata_json(cfg: &RunConfig, res: &ExperimentResult) -> serde_json::Value {
    json!({
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "versions": {
            "jba-readout": env!("CARGO_PKG_VERSION"),
        },
        "protocol": res.metadata.protocol,
        "device_hash": res.metadata.device_hash,
        "inputs": res.metadata.inputs,
        "scalars": res.scalars,
        "fits": res.fits,
        "notes": res.notes,
        "config": cfg.canonical(),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes `results.csv`, `long.csv`, `metadata.json`, `summary.txt` and
/// (for shot records) `traces/shot_NNNN.csv` under `dir`. Returns the
/// written paths.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let path = dir.join("results.csv");
    let mut buf = Vec::new();
    results_csv(&out.result, &mut buf, &path)?;
    write_file(&path, &buf)?;
    written.push(path);

    let path = dir.join("long.csv");
    let mut buf = Vec::new();
    long_csv(&out.result, &mut buf, &path)?;
    write_file(&path, &buf)?;
    written.push(path);

    let path = dir.join("metadata.json");
    let mut text = serde_json::to_string_pretty(&metadata_json(cfg, &out.result))
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    text.push('\n');
    write_file(&path, text.as_bytes())?;
    written.push(path);

    let path = dir.join("summary.txt");
    write_file(&path, emit_summary(&out.result).to_string().as_bytes())?;
    written.push(path);

    if !out.traces.is_empty() {
        let traces = dir.join("traces");
        fs::create_dir_all(&traces).map_err(io_err(&traces))?;
        for (k, trace) in out.traces.iter().enumerate() {
            let path = traces.join(format!("shot_{k:04}.csv"));
            let mut buf = Vec::new();
            write_trace_csv(trace, &mut buf)?;
            write_file(&path, &buf)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Human-readable headline numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub lines: Vec<String>,
    pub has_data: bool,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn est(res: &ExperimentResult, name: &str, places: usize) -> String {
    match res.scalar(name) {
        Some(e) if e.value.is_finite() => {
            format!("{:.p$} ± {:.p$}", e.value, e.stderr, p = places)
        }
        _ => "n/a".to_string(),
    }
}

fn per_point(res: &ExperimentResult, series: &str, places: usize) -> Vec<(f64, String)> {
    let Some(s) = res.series(series) else {
        return Vec::new();
    };
    res.x_grid
        .iter()
        .zip(s.values.iter().zip(&s.stderr))
        .map(|(x, (v, e))| {
            let text = if v.is_finite() {
                format!("{v:.p$} ± {e:.p$}", p = places)
            } else {
                "n/a".to_string()
            };
            (*x, text)
        })
        .collect()
}

/// Headline numbers of a result with fixed decimal places.
pub fn emit_summary(res: &ExperimentResult) -> Summary {
    if res.is_empty() {
        return Summary {
            lines: vec!["no data".to_string()],
            has_data: false,
        };
    }
    let mut lines = vec![format!(
        "{}: {} points, seed {}",
        res.metadata.protocol,
        res.x_grid.len(),
        res.metadata.seed
    )];
    match res.metadata.protocol.as_str() {
        "scurve" => {
            lines.push(format!(
                "contrast(0→1) = {}, contrast(0→2) = {}",
                est(res, "contrast_01", 3),
                est(res, "contrast_02", 3)
            ));
            lines.push(format!(
                "at P = {} dB and {} dB",
                est(res, "contrast_01_power", 2),
                est(res, "contrast_02_power", 2)
            ));
        }
        "rabi" => {
            lines.push(format!("visibility = {}", est(res, "visibility", 3)));
            lines.push(format!("decay = {} ns", est(res, "rabi_decay_ns", 1)));
            lines.push(format!("rabi frequency = {} MHz", est(res, "rabi_frequency_mhz", 3)));
        }
        "t1" => lines.push(format!("T1 = {} us", est(res, "T1_us", 3))),
        "t1_under_drive" => {
            for (p, text) in per_point(res, "T1_us", 3) {
                lines.push(format!("T1(P = {p:.2} dB) = {text} us"));
            }
        }
        "ramsey" => {
            lines.push(format!("T2 = {} us", est(res, "T2_us", 3)));
            lines.push(format!("fringe = {} MHz", est(res, "fringe_mhz", 3)));
        }
        "two_readout" => {
            for r in ["R1", "R2", "R3"] {
                if res.scalar(&format!("visibility_{r}")).is_some() {
                    lines.push(format!("visibility {r} = {}", est(res, &format!("visibility_{r}"), 3)));
                }
            }
        }
        "ac_stark" => {
            lines.push(format!("threshold = {} dB", est(res, "threshold_dB", 2)));
            lines.push(format!(
                "n_bar below = {}, above = {}",
                est(res, "n_bar_below", 2),
                est(res, "n_bar_above", 2)
            ));
        }
        "sweep_detuning" => {
            for (d, text) in per_point(res, "contrast", 3) {
                lines.push(format!("delta = {d:.3} GHz: contrast = {text}"));
            }
        }
        "shot_trace" => {
            let get = |name: &str| res.series(name).map(|s| s.values.clone()).unwrap_or_default();
            let (prep, time, high, margin) =
                (get("prepared"), get("bifurcation_time_ns"), get("branch_high"), get("margin"));
            for k in 0..res.x_grid.len() {
                let switched = if time[k].is_finite() {
                    format!("switched at {:.1} ns", time[k])
                } else {
                    "no switch".to_string()
                };
                let branch = if high[k] > 0.5 { "high" } else { "low" };
                lines.push(format!(
                    "shot {k}: prepared |{}>, {switched}, read {branch} (margin {:.1})",
                    prep[k] as u8, margin[k]
                ));
            }
        }
        _ => {
            for (name, e) in &res.scalars {
                lines.push(format!("{name} = {:.4} ± {:.4}", e.value, e.stderr));
            }
        }
    }
    for note in &res.notes {
        lines.push(format!("note: {note}"));
    }
    Summary {
        lines,
        has_data: true,
    }
}

/// Outcome of [`dispatch`].
#[derive(Debug, Clone)]
pub struct Dispatched {
    pub output: RunOutput,
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

impl Dispatched {
    /// Process exit status: 0 on success, 2 when a grid point failed or
    /// the result holds no data.
    pub fn exit_code(&self) -> i32 {
        if !self.summary.has_data || !self.output.result.notes.is_empty() {
            2
        } else {
            0
        }
    }
}

/// Runs a validated config and writes its artifacts to `cfg.output_dir`.
pub fn dispatch(cfg: &RunConfig) -> Result<Dispatched> {
    let output = run_experiment(cfg)?;
    let files = write_outputs(cfg, &output, &cfg.output_dir)?;
    let summary = emit_summary(&output.result);
    Ok(Dispatched {
        output,
        summary,
        files,
    })
}
