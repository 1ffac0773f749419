// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configs, dispatch and result files.

mod config;
mod output;
mod run;

pub use config::{
    load_config, parse_config, AcStarkSpec, Experiment, Grid, Method, RabiSpec, RamseySpec,
    RangeSpec, ReadoutSpec, RunConfig, ScurveSpec, ShotTraceSpec, SweepSpec, T1Spec,
    TwoReadoutSpec, MAX_GRID_POINTS,
};
pub use output::{
    dispatch, emit_summary, long_csv, metadata_json, results_csv, write_outputs, Dispatched,
    Summary,
};
pub use run::{run_experiment, RunOutput};

/// Sizes the global worker pool. Results do not depend on the count.
pub fn init_threads(threads: usize) -> crate::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| crate::Error::param("threads", e.to_string()))
}
