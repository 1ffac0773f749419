// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::analysis::max_contrast;
use super::fit::{fit_damped_sine, fit_exponential, FitResult};
use super::result::{ExperimentResult, Metadata};
use super::sequence::{build_composite_readout, prepare_then, PulseSequence, SegmentKind};
use super::setup::Setup;
use crate::device::CoherenceBudget;
use crate::error::{Error, Result};
use crate::jba::SCurveModel;
use crate::readout::{
    sample_state, shot_rng, switching_probability, two_readout_run, Populations, RabiDrive,
    ReadoutModel, ReadoutPulse, ShotSimulator,
};

/// How bifurcation probabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampling {
    /// Exact ensemble average by population propagation.
    Expected,
    MonteCarlo { shots: u64 },
}

impl Sampling {
    pub fn validate(&self) -> Result<()> {
        match self {
            Sampling::MonteCarlo { shots } if *shots < crate::readout::mc::MIN_SHOTS => Err(
                Error::param("shots", format!("must be >= {}", crate::readout::mc::MIN_SHOTS)),
            ),
            _ => Ok(()),
        }
    }

    pub fn shots(&self) -> u64 {
        match self {
            Sampling::Expected => 0,
            Sampling::MonteCarlo { shots } => *shots,
        }
    }
}

/// Readout of one pulse shape, reusable across state preparations.
pub struct Reader {
    sim: ShotSimulator,
    cascade: CoherenceBudget,
}

impl Reader {
    pub fn new(model: &ReadoutModel, pulse: &ReadoutPulse) -> Result<Self> {
        Ok(Self {
            sim: ShotSimulator::new(model, pulse)?,
            cascade: model.cascade.clone(),
        })
    }

    /// Switching probability and its standard error for qubit populations
    /// `pop` at the start of the pulse.
    pub fn measure(&self, pop: &Populations, sampling: Sampling, seed: u64, point: u64) -> (f64, f64) {
        match sampling {
            Sampling::Expected => (switching_probability(*pop, &self.sim.table, &self.cascade), 0.0),
            Sampling::MonteCarlo { shots } => {
                let hits = (0..shots)
                    .into_par_iter()
                    .filter(|&shot| {
                        let mut rng = shot_rng(seed, point, shot);
                        let state = sample_state(pop, &mut rng);
                        self.sim.run(state, &mut rng).bifurcation_time.is_some()
                    })
                    .count();
                let p = hits as f64 / shots as f64;
                (p, (p * (1.0 - p) / shots as f64).sqrt())
            }
        }
    }
}

fn metadata(setup: &Setup, protocol: &str, seed: u64, inputs: serde_json::Value) -> Metadata {
    Metadata::new(protocol, seed, setup.device.hash(), inputs)
}

fn sorted(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(name, "must not be empty"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::param(name, "must be sorted and finite"));
    }
    Ok(())
}

/// Populations at the start of the readout of `seq`.
fn start_populations(setup: &Setup, seq: &PulseSequence) -> Populations {
    seq.populations(setup.prep.initial(), &setup.prep, &setup.budget)
}

/// S-curves of the three preparations: |0>, |1>, and |1> read out with
/// shelving (labelled state 2). Grid point k of curve s uses substream
/// `s * len + k`.
pub fn run_scurves(
    setup: &Setup,
    pulse: &ReadoutPulse,
    grid: &[f64],
    sampling: Sampling,
    seed: u64,
) -> Result<ExperimentResult> {
    sorted(grid, "P_grid")?;
    sampling.validate()?;
    let model = setup.model(pulse.f_drive)?;
    let plain = build_composite_readout(false, setup, *pulse)?;
    let shelved = build_composite_readout(true, setup, *pulse)?;
    let pops = [
        start_populations(setup, &prepare_then(setup, 0, &plain)?),
        start_populations(setup, &prepare_then(setup, 1, &plain)?),
        start_populations(setup, &prepare_then(setup, 1, &shelved)?),
    ];
    let n = grid.len();
    let mut values = vec![vec![0.0; n]; 3];
    let mut errors = vec![vec![0.0; n]; 3];
    for (k, &power) in grid.iter().enumerate() {
        let reader = Reader::new(&model, &pulse.with_sample_power(power))?;
        for s in 0..3 {
            let (p, e) = reader.measure(&pops[s], sampling, seed, (s * n + k) as u64);
            values[s][k] = p;
            errors[s][k] = e;
        }
    }
    let mut res = ExperimentResult::new(
        "P_dB",
        grid.to_vec(),
        metadata(
            setup,
            "scurve",
            seed,
            json!({"delta": setup.delta, "pulse": pulse, "sampling": sampling}),
        ),
    );
    for s in 0..3 {
        res.push_series(&format!("pB_state{s}"), values[s].clone(), errors[s].clone())?;
    }
    for (s, name) in [(1, "contrast_01"), (2, "contrast_02")] {
        let (c, k) = max_contrast(&values[s], &values[0]);
        let err = errors[s][k].hypot(errors[0][k]);
        res.set(name, c, err);
        res.set(&format!("{name}_power"), grid[k], 0.0);
    }
    Ok(res)
}

/// Extracts one S-curve from a [`run_scurves`] result.
pub fn scurve_of(res: &ExperimentResult, state: usize, t_s: f64) -> Result<SCurveModel> {
    let name = format!("pB_state{state}");
    let s = res
        .series(&name)
        .ok_or_else(|| Error::param("state", format!("no series {name}")))?;
    Ok(SCurveModel {
        grid: res.x_grid.clone(),
        p_b: s.values.clone(),
        stderr: s.stderr.clone(),
        shots: res.metadata.inputs["sampling"]["shots"].as_u64().unwrap_or(0),
        t_s,
        label: format!("S{state}"),
    })
}

fn fit_curve(x: &[f64], y: &[f64], e: &[f64], sine: bool) -> Result<FitResult> {
    let weights = e.iter().any(|v| *v > 0.0).then_some(e);
    if sine {
        fit_damped_sine(x, y, weights)
    } else {
        fit_exponential(x, y, weights)
    }
}

/// Rabi oscillation read out at `pulse`, optionally with shelving.
/// Reports `visibility` (twice the fitted amplitude), `rabi_decay_ns` and
/// `rabi_frequency_mhz`.
pub fn run_rabi(
    setup: &Setup,
    drive: &RabiDrive,
    grid: &[f64],
    pulse: &ReadoutPulse,
    shelve: bool,
    sampling: Sampling,
    seed: u64,
) -> Result<ExperimentResult> {
    sorted(grid, "dt_grid")?;
    sampling.validate()?;
    drive.validate()?;
    if grid[0] < 0.0 {
        return Err(Error::param("dt_grid", "must be >= 0"));
    }
    let reader = Reader::new(&setup.model(pulse.f_drive)?, pulse)?;
    let tail = build_composite_readout(shelve, setup, *pulse)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let mut seq = PulseSequence::new();
        seq.push(SegmentKind::Rabi { drive: *drive }, setup.spectrum.f01, t)?;
        for s in &tail.segments {
            seq.push(s.kind.clone(), s.frequency, s.duration)?;
        }
        let (p, e) = reader.measure(&start_populations(setup, &seq), sampling, seed, k as u64);
        values.push(p);
        errors.push(e);
    }
    let fit = fit_curve(grid, &values, &errors, true)?;
    let mut res = ExperimentResult::new(
        "dt_ns",
        grid.to_vec(),
        metadata(
            setup,
            "rabi",
            seed,
            json!({"delta": setup.delta, "pulse": pulse, "shelve": shelve, "drive": drive, "sampling": sampling}),
        ),
    );
    res.push_series("pB", values, errors)?;
    let (a, ae) = fit.get("amplitude").unwrap_or((f64::NAN, f64::NAN));
    res.set("visibility", 2.0 * a, 2.0 * ae);
    let (tau, te) = fit.get("decay").unwrap_or((f64::NAN, f64::NAN));
    res.set("rabi_decay_ns", tau, te);
    let (f, fe) = fit.get("frequency").unwrap_or((f64::NAN, f64::NAN));
    res.set("rabi_frequency_mhz", f * 1e3, fe * 1e3);
    res.fits.insert("damped_sine".into(), fit);
    Ok(res)
}

fn t1_sequence(
    setup: &Setup,
    delay: f64,
    drive_power: Option<f64>,
    tail: &PulseSequence,
) -> Result<PulseSequence> {
    let mut seq = PulseSequence::new();
    seq.pi(setup, crate::readout::Transition::Ge)?;
    let kind = match drive_power {
        Some(power_db) => SegmentKind::Drive { power_db },
        None => SegmentKind::Idle,
    };
    seq.push(kind, tail.segments.last().map_or(0.0, |s| s.frequency), delay)?;
    for s in &tail.segments {
        seq.push(s.kind.clone(), s.frequency, s.duration)?;
    }
    Ok(seq)
}

/// Energy relaxation: pi pulse, delay (optionally under an auxiliary drive
/// at `drive_power` dB), readout. Reports `T1_us`.
#[allow(clippy::too_many_arguments)]
pub fn run_t1(
    setup: &Setup,
    delays: &[f64],
    pulse: &ReadoutPulse,
    shelve: bool,
    drive_power: Option<f64>,
    sampling: Sampling,
    seed: u64,
    point_offset: u64,
) -> Result<ExperimentResult> {
    sorted(delays, "delay_grid")?;
    sampling.validate()?;
    if delays[0] < 0.0 {
        return Err(Error::param("delay_grid", "must be >= 0"));
    }
    let reader = Reader::new(&setup.model(pulse.f_drive)?, pulse)?;
    let tail = build_composite_readout(shelve, setup, *pulse)?;
    let mut values = Vec::with_capacity(delays.len());
    let mut errors = Vec::with_capacity(delays.len());
    for (k, &t) in delays.iter().enumerate() {
        let seq = t1_sequence(setup, t, drive_power, &tail)?;
        let (p, e) = reader.measure(
            &start_populations(setup, &seq),
            sampling,
            seed,
            point_offset + k as u64,
        );
        values.push(p);
        errors.push(e);
    }
    let fit = fit_curve(delays, &values, &errors, false)?;
    let mut res = ExperimentResult::new(
        "delay_ns",
        delays.to_vec(),
        metadata(
            setup,
            "t1",
            seed,
            json!({"delta": setup.delta, "pulse": pulse, "shelve": shelve, "drive_power": drive_power, "sampling": sampling}),
        ),
    );
    res.push_series("pB", values, errors)?;
    let (tau, te) = fit.get("decay").unwrap_or((f64::NAN, f64::NAN));
    res.set("T1_us", tau * 1e-3, te * 1e-3);
    res.fits.insert("exponential".into(), fit);
    Ok(res)
}

/// T1 measured with an auxiliary drive of each power in `powers` applied
/// during the delay.
pub fn run_t1_under_drive(
    setup: &Setup,
    delays: &[f64],
    powers: &[f64],
    pulse: &ReadoutPulse,
    sampling: Sampling,
    seed: u64,
) -> Result<ExperimentResult> {
    sorted(powers, "P_grid")?;
    let mut t1 = Vec::with_capacity(powers.len());
    let mut err = Vec::with_capacity(powers.len());
    for (j, &p) in powers.iter().enumerate() {
        let r = run_t1(setup, delays, pulse, false, Some(p), sampling, seed, (j * delays.len()) as u64)?;
        let e = r.scalar("T1_us").expect("run_t1 sets T1_us");
        t1.push(e.value);
        err.push(e.stderr);
    }
    let mut res = ExperimentResult::new(
        "P_dB",
        powers.to_vec(),
        metadata(
            setup,
            "t1_under_drive",
            seed,
            json!({"delta": setup.delta, "pulse": pulse, "delays": delays, "sampling": sampling}),
        ),
    );
    res.push_series("T1_us", t1, err)?;
    Ok(res)
}

/// Ramsey fringes at `detuning_mhz`. The fringe decays with the coherence
/// time of `setup.budget`. Reports `T2_us` and `fringe_mhz`.
pub fn run_ramsey(
    setup: &Setup,
    delays: &[f64],
    detuning_mhz: f64,
    pulse: &ReadoutPulse,
    shelve: bool,
    sampling: Sampling,
    seed: u64,
) -> Result<ExperimentResult> {
    sorted(delays, "delay_grid")?;
    sampling.validate()?;
    if detuning_mhz == 0.0 || !detuning_mhz.is_finite() {
        return Err(Error::param("detuning", "must be non-zero"));
    }
    if delays[0] < 0.0 {
        return Err(Error::param("delay_grid", "must be >= 0"));
    }
    let t2 = setup.budget.t2 * 1e3;
    let reader = Reader::new(&setup.model(pulse.f_drive)?, pulse)?;
    let tail = build_composite_readout(shelve, setup, *pulse)?;
    let mut values = Vec::with_capacity(delays.len());
    let mut errors = Vec::with_capacity(delays.len());
    for (k, &t) in delays.iter().enumerate() {
        let mut seq = PulseSequence::new();
        seq.push(SegmentKind::Ramsey { detuning_mhz, t2 }, setup.spectrum.f01, t)?;
        for s in &tail.segments {
            seq.push(s.kind.clone(), s.frequency, s.duration)?;
        }
        let (p, e) = reader.measure(&start_populations(setup, &seq), sampling, seed, k as u64);
        values.push(p);
        errors.push(e);
    }
    let fit = fit_curve(delays, &values, &errors, true)?;
    let mut res = ExperimentResult::new(
        "delay_ns",
        delays.to_vec(),
        metadata(
            setup,
            "ramsey",
            seed,
            json!({"delta": setup.delta, "pulse": pulse, "detuning_mhz": detuning_mhz, "shelve": shelve, "sampling": sampling}),
        ),
    );
    res.push_series("pB", values, errors)?;
    let (tau, te) = fit.get("decay").unwrap_or((f64::NAN, f64::NAN));
    res.set("T2_us", tau * 1e-3, te * 1e-3);
    let (f, fe) = fit.get("frequency").unwrap_or((f64::NAN, f64::NAN));
    res.set("fringe_mhz", f * 1e3, fe * 1e3);
    res.fits.insert("damped_sine".into(), fit);
    Ok(res)
}

/// Back-action sequence of two readouts after a Rabi pulse. Reports the
/// fitted visibilities `visibility_R1`, `visibility_R2`, `visibility_R3`.
#[allow(clippy::too_many_arguments)]
pub fn run_two_readout(
    setup: &Setup,
    drive: &RabiDrive,
    grid: &[f64],
    pulse1: Option<&ReadoutPulse>,
    delay: f64,
    pulse2: &ReadoutPulse,
    shots: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    sorted(grid, "dt_grid")?;
    Sampling::MonteCarlo { shots }.validate()?;
    if let Some(p1) = pulse1 {
        if (p1.f_drive - pulse2.f_drive).abs() > 1e-12 {
            return Err(Error::param("pulse1", "both readouts must share the drive frequency"));
        }
    }
    let model = setup.model(pulse2.f_drive)?;
    let curves = two_readout_run(
        &model,
        &setup.prep.initial(),
        drive,
        grid,
        pulse1,
        delay,
        pulse2,
        shots,
        seed,
    )?;
    let mut res = ExperimentResult::new(
        "dt_ns",
        grid.to_vec(),
        metadata(
            setup,
            "two_readout",
            seed,
            json!({"delta": setup.delta, "pulse1": pulse1, "pulse2": pulse2, "delay": delay, "drive": drive, "shots": shots}),
        ),
    );
    for (name, curve) in [("R1", &curves.r1), ("R2", &curves.r2), ("R3", &curves.r3)] {
        if curve.iter().any(|v| v.is_nan()) {
            continue;
        }
        let err = curves.stderr(curve);
        let fit = fit_curve(grid, curve, &err, true)?;
        let (a, ae) = fit.get("amplitude").unwrap_or((f64::NAN, f64::NAN));
        res.set(&format!("visibility_{name}"), 2.0 * a, 2.0 * ae);
        res.fits.insert(name.to_string(), fit);
        res.push_series(name, curve.clone(), err)?;
    }
    Ok(res)
}
