// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use super::shot::Trace;
use crate::error::{Error, Result};
use crate::jba::SCurveModel;

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: String::new(),
        message: e.to_string(),
    }
}

/// Writes a trace as `t_ns,I,Q`.
pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_ns", "I", "Q"]).map_err(csv_err)?;
    for k in 0..trace.t_ns.len() {
        w.write_record([
            format!("{:.3}", trace.t_ns[k]),
            format!("{:.9e}", trace.i[k]),
            format!("{:.9e}", trace.q[k]),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

/// Writes an S-curve as `P_dB,p_B,stderr,n_shots`.
pub fn write_scurve_csv<W: Write>(curve: &SCurveModel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["P_dB", "p_B", "stderr", "n_shots"]).map_err(csv_err)?;
    for k in 0..curve.grid.len() {
        w.write_record([
            format!("{:.4}", curve.grid[k]),
            format!("{:.6}", curve.p_b[k]),
            format!("{:.6}", curve.stderr[k]),
            curve.shots.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}
