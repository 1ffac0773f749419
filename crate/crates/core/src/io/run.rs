// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use serde_json::json;

use super::config::{Experiment, Method, ReadoutSpec, RunConfig};
use crate::error::Result;
use crate::jba::{JbaOperatingPoint, PowerReference};
use crate::protocols::{
    contrast_vs_detuning, optimal_power, readout_populations, run_ac_stark, run_rabi, run_ramsey,
    run_scurves, run_t1, run_t1_under_drive, run_two_readout, ExperimentResult, Metadata, Sampling,
    Setup, Timing,
};
use crate::readout::{
    discriminate, homodyne_trace, simulate_shot, Branch, NoiseChain, ReadoutPulse, ShotSeed, Trace,
};

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub result: ExperimentResult,
    /// Homodyne records, one per shot, for `shot_trace`.
    pub traces: Vec<Trace>,
}

fn setup_for(cfg: &RunConfig, delta: f64) -> Result<Setup> {
    let s = Setup::new(&cfg.device, delta)?.with_prep(cfg.prep);
    Ok(match cfg.escape {
        Some(e) => s.with_escape(e),
        None => s,
    })
}

fn sampling(cfg: &RunConfig) -> Sampling {
    match cfg.method {
        Method::MonteCarlo => Sampling::MonteCarlo { shots: cfg.shots },
        Method::Expected => Sampling::Expected,
    }
}

/// Pulse at the configured power, or at the power maximizing the expected
/// contrast between |0> and |1> (shelved when `shelve`).
fn resolve_pulse(setup: &Setup, spec: &ReadoutSpec, shelve: bool) -> Result<ReadoutPulse> {
    let base = spec.pulse(0.0)?;
    let power = match spec.power_db {
        Some(p) => p,
        None => {
            let lo = readout_populations(setup, &base, 0, false)?;
            let hi = readout_populations(setup, &base, 1, shelve)?;
            optimal_power(setup, &base, &lo, &hi)?
        }
    };
    Ok(base.with_sample_power(power))
}

fn shot_traces(cfg: &RunConfig, delta: f64, spec: &super::config::ShotTraceSpec) -> Result<RunOutput> {
    let setup = setup_for(cfg, delta)?;
    let pulse = resolve_pulse(&setup, &spec.readout, false)?;
    let noise = NoiseChain::new(cfg.device.noise_temp_k, spec.lpf_mhz, spec.sample_period)?;
    let flux = PowerReference::new(&cfg.device, pulse.f_drive).photon_flux(pulse.p_sample);
    // discriminate over the second half of the hold plateau
    let window = (
        pulse.decision_time() + 0.5 * pulse.t_hold,
        pulse.duration(),
    );
    let n = cfg.shots as usize;
    let mut prepared = Vec::with_capacity(n);
    let mut switched = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    let mut high = Vec::with_capacity(n);
    let mut margins = Vec::with_capacity(n);
    let mut traces = Vec::with_capacity(n);
    for k in 0..n {
        let state = spec.states[k % spec.states.len()];
        let seed = ShotSeed {
            master: cfg.seed,
            point: 0,
            shot: k as u64,
        };
        let shot = simulate_shot(
            state,
            &pulse,
            &setup.device,
            &setup.map,
            &setup.escape,
            &setup.budget,
            seed,
        )?;
        let point = JbaOperatingPoint::for_state(&setup.device, &setup.map, state as usize, pulse.f_drive)?;
        let trace = homodyne_trace(
            &shot,
            &point,
            &pulse,
            flux,
            &noise,
            ShotSeed { point: 1, ..seed },
        )?;
        let (branch, margin) = discriminate(&trace, window, 0.5, &noise)?;
        prepared.push(state as f64);
        switched.push(if shot.bifurcated { 1.0 } else { 0.0 });
        times.push(shot.bifurcation_time.unwrap_or(f64::NAN));
        high.push(if branch == Branch::High { 1.0 } else { 0.0 });
        margins.push(margin);
        traces.push(trace);
    }
    let mut res = ExperimentResult::new(
        "shot",
        (0..n).map(|k| k as f64).collect(),
        Metadata::new(
            "shot_trace",
            cfg.seed,
            setup.device.hash(),
            json!({"delta": delta, "pulse": pulse, "noise": noise, "window": [window.0, window.1]}),
        ),
    );
    let zeros = vec![0.0; n];
    res.push_series("prepared", prepared, zeros.clone())?;
    res.push_series("bifurcated", switched, zeros.clone())?;
    res.push_series("bifurcation_time_ns", times, zeros.clone())?;
    res.push_series("branch_high", high, zeros.clone())?;
    res.push_series("margin", margins, zeros)?;
    Ok(RunOutput { result: res, traces })
}

/// Runs the configured experiment. The config must have been validated.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput> {
    let seed = cfg.seed;
    let mut result = match &cfg.experiment {
        Experiment::Scurve(s) => {
            let setup = setup_for(cfg, s.delta)?;
            let base = s.readout.pulse(0.0)?;
            run_scurves(&setup, &base, &s.power_grid.values(), sampling(cfg), seed)?
        }
        Experiment::Rabi(s) => {
            let setup = setup_for(cfg, s.delta)?;
            let pulse = resolve_pulse(&setup, &s.readout, s.shelve)?;
            run_rabi(&setup, &s.drive, &s.dt_grid.values(), &pulse, s.shelve, sampling(cfg), seed)?
        }
        Experiment::Ramsey(s) => {
            let setup = setup_for(cfg, s.delta)?;
            let pulse = resolve_pulse(&setup, &s.readout, s.shelve)?;
            run_ramsey(
                &setup,
                &s.delay_grid.values(),
                s.detuning_mhz,
                &pulse,
                s.shelve,
                sampling(cfg),
                seed,
            )?
        }
        Experiment::T1(s) => {
            let setup = setup_for(cfg, s.delta)?;
            let pulse = resolve_pulse(&setup, &s.readout, s.shelve)?;
            let delays = s.delay_grid.values();
            match &s.drive_power_grid {
                Some(g) => run_t1_under_drive(&setup, &delays, &g.values(), &pulse, sampling(cfg), seed)?,
                None => run_t1(&setup, &delays, &pulse, s.shelve, None, sampling(cfg), seed, 0)?,
            }
        }
        Experiment::TwoReadout(s) => {
            let setup = setup_for(cfg, s.delta)?;
            let pulse = resolve_pulse(&setup, &s.readout, false)?;
            let first = s.first_readout.then_some(&pulse);
            run_two_readout(&setup, &s.drive, &s.dt_grid.values(), first, s.delay, &pulse, cfg.shots, seed)?
        }
        Experiment::AcStark(s) => {
            let setup = setup_for(cfg, s.delta)?;
            run_ac_stark(&setup, s.f_drive, &s.power_grid.values())?
        }
        Experiment::SweepDetuning(s) => {
            let timing = Timing {
                offset_mhz: (cfg.device.cavity_freq - s.readout.f_drive) * 1e3,
                t_rise: s.readout.t_rise,
                t_sample: s.readout.t_sample,
                t_hold: s.readout.t_hold,
            };
            contrast_vs_detuning(
                &cfg.device,
                &s.delta_grid.values(),
                &timing,
                cfg.escape,
                cfg.prep,
                cfg.shots,
                seed,
            )?
        }
        Experiment::ShotTrace(s) => return shot_traces(cfg, s.delta, s),
    };
    result.metadata.seed = seed;
    Ok(RunOutput {
        result,
        traces: Vec::new(),
    })
}
