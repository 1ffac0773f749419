// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment builders and analysis.

pub mod analysis;
pub mod experiments;
pub mod fit;
pub mod result;
pub mod sequence;
pub mod setup;
pub mod stark;
pub mod sweep;

pub use analysis::{
    golden_section, max_contrast, scurve_decompose, scurve_shift_match, shifted_scurve,
    Decomposition, LOW_PB,
};
pub use experiments::{
    run_rabi, run_ramsey, run_scurves, run_t1, run_t1_under_drive, run_two_readout, scurve_of,
    Reader, Sampling,
};
pub use fit::{fit_damped_sine, fit_exponential, FitModel, FitResult};
pub use result::{Estimate, ExperimentResult, Metadata, Series};
pub use sequence::{build_composite_readout, prepare_then, Envelope, PulseSequence, Segment, SegmentKind};
pub use setup::Setup;
pub use stark::run_ac_stark;
pub use sweep::{
    contrast_vs_detuning, optimal_power, readout_populations, scurve_width, state_thresholds, Timing,
    POWER_TOL_DB,
};
