// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-shot readout: state preparation, switching statistics under a
//! shaped pulse, and homodyne records.

pub mod expect;
pub mod export;
pub mod hazard;
pub mod mc;
pub mod prep;
pub mod pulse;
pub mod rng;
pub mod shot;
pub mod trace;
pub mod two_readout;

pub use expect::{propagate, switching_probability};
pub use hazard::{HazardTable, ReadoutModel};
pub use mc::{median_switching_time, run_scurve_mc, scurve_expected, switching_times};
pub use export::{write_scurve_csv, write_trace_csv};
pub use prep::{decay, sample_state, Populations, Preparation, RabiDrive, Transition};
pub use pulse::ReadoutPulse;
pub use rng::{shot_rng, ShotSeed};
pub use shot::{idle, simulate_shot, Jump, ShotOutcome, ShotRecord, ShotSimulator, Trace};
pub use trace::{
    averaged_snr, discriminate, discrimination_error, homodyne_trace, Branch, NoiseChain, TraceFrame,
};
pub use two_readout::{two_readout_run, TwoReadoutCurves};
