// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Homodyne records of the reflected readout field.
//!
//! Quadratures are expressed in trace units: the reflected amplitude at hold
//! power is rotated so that the high-branch minus low-branch difference lies
//! along +I, offset so the low branch sits at I = 0, and scaled so the high
//! branch sits at I = 1.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pulse::ReadoutPulse;
use super::rng::ShotSeed;
use super::shot::{ShotRecord, Trace};
use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};
use crate::jba::{steady_states, JbaOperatingPoint};

/// Amplifier noise referred to the sample and the detection bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseChain {
    /// Noise temperature (K).
    pub t_n: f64,
    /// Low-pass corner (MHz).
    pub lpf_cutoff: f64,
    /// Sample period (ns).
    pub dt: f64,
}

impl NoiseChain {
    pub fn new(t_n: f64, lpf_cutoff: f64, dt: f64) -> Result<Self> {
        let chain = Self { t_n, lpf_cutoff, dt };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_n >= 0.0) || !self.t_n.is_finite() {
            return Err(Error::param("T_N", "must be >= 0"));
        }
        if !(self.lpf_cutoff > 0.0) {
            return Err(Error::param("lpf_cutoff", "must be > 0"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt", "must be > 0"));
        }
        Ok(())
    }

    /// Noise bandwidth 1 / (2 dt) (Hz).
    pub fn bandwidth(&self) -> f64 {
        0.5e9 / self.dt
    }

    /// White-noise standard deviation per sample of the reflected amplitude
    /// (sqrt(photons/s)).
    pub fn sigma_amplitude(&self, f_drive: f64) -> f64 {
        (BOLTZMANN * self.t_n * self.bandwidth() / (PLANCK * f_drive * 1e9)).sqrt()
    }

    /// Correlation time of the filtered noise (ns).
    pub fn filter_time(&self) -> f64 {
        1e3 / (2.0 * std::f64::consts::PI * self.lpf_cutoff)
    }
}

/// Steady reflected amplitude (sqrt(photons/s)) on the low or high branch.
fn reflected(point: &JbaOperatingPoint, flux: f64, high: bool) -> (f64, f64) {
    if flux <= 0.0 {
        return (0.0, 0.0);
    }
    let eps = (point.kappa * flux).sqrt();
    let roots = steady_states(point, eps);
    let n = if high { roots[roots.len() - 1] } else { roots[0] };
    let (re, im) = point.reflection(n);
    let a = flux.sqrt();
    (re * a, im * a)
}

/// Maps reflected amplitudes to trace units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFrame {
    origin: (f64, f64),
    /// Unit vector along high minus low, divided by the separation.
    axis: (f64, f64),
    pub separation: f64,
}

impl TraceFrame {
    /// Frame at sample-referred photon flux `flux` (1/s).
    pub fn new(point: &JbaOperatingPoint, flux: f64) -> Result<Self> {
        let low = reflected(point, flux, false);
        let high = reflected(point, flux, true);
        let d = (high.0 - low.0, high.1 - low.1);
        let separation = d.0.hypot(d.1);
        if !(separation > 0.0) {
            return Err(Error::Domain(
                "low and high branches coincide at hold power".into(),
            ));
        }
        Ok(Self {
            origin: low,
            axis: (d.0 / separation, d.1 / separation),
            separation,
        })
    }

    pub fn project(&self, b: (f64, f64)) -> (f64, f64) {
        let (x, y) = (b.0 - self.origin.0, b.1 - self.origin.1);
        let i = (x * self.axis.0 + y * self.axis.1) / self.separation;
        let q = (-x * self.axis.1 + y * self.axis.0) / self.separation;
        (i, q)
    }
}

/// Synthesizes the I/Q record of `shot` read out with `pulse` at `point`.
///
/// `sample_flux` is the sample-referred photon flux at the sampling power.
pub fn homodyne_trace(
    shot: &ShotRecord,
    point: &JbaOperatingPoint,
    pulse: &ReadoutPulse,
    sample_flux: f64,
    noise: &NoiseChain,
    seed: ShotSeed,
) -> Result<Trace> {
    noise.validate()?;
    let hold_flux = sample_flux * pulse.envelope(pulse.decision_time() + 1e-9);
    let frame = TraceFrame::new(point, hold_flux)?;
    let sigma = noise.sigma_amplitude(pulse.f_drive) / frame.separation;
    let n = (pulse.duration() / noise.dt).floor() as usize + 1;
    let tau_field = 2.0 / point.kappa * 1e9;
    let field_step = 1.0 - (-noise.dt / tau_field).exp();
    let lpf_step = 1.0 - (-noise.dt / noise.filter_time()).exp();
    let mut rng = seed.rng();
    // the resonator starts empty
    let mut field = frame.project((0.0, 0.0));
    let mut out = (0.0, 0.0);
    let mut trace = Trace {
        t_ns: Vec::with_capacity(n),
        i: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
    };
    for k in 0..n {
        let t = k as f64 * noise.dt;
        let high = shot.bifurcation_time.is_some_and(|tb| t >= tb);
        let target = frame.project(reflected(point, sample_flux * pulse.envelope(t), high));
        field.0 += field_step * (target.0 - field.0);
        field.1 += field_step * (target.1 - field.1);
        let (ni, nq): (f64, f64) = if sigma > 0.0 {
            (
                sigma * rng.sample::<f64, _>(StandardNormal),
                sigma * rng.sample::<f64, _>(StandardNormal),
            )
        } else {
            (0.0, 0.0)
        };
        let raw = (field.0 + ni, field.1 + nq);
        if k == 0 {
            out = raw;
        } else {
            out.0 += lpf_step * (raw.0 - out.0);
            out.1 += lpf_step * (raw.1 - out.1);
        }
        trace.t_ns.push(t);
        trace.i.push(out.0);
        trace.q.push(out.1);
    }
    Ok(trace)
}

/// Outcome of thresholding a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Low,
    High,
}

/// Averages `trace.i` over `[start, end)` ns and compares with `threshold`.
/// The margin is the distance to the threshold in standard errors of the
/// window mean, with the filter correlation time taken into account.
pub fn discriminate(
    trace: &Trace,
    window: (f64, f64),
    threshold: f64,
    noise: &NoiseChain,
) -> Result<(Branch, f64)> {
    let (start, end) = window;
    let samples: Vec<f64> = trace
        .t_ns
        .iter()
        .zip(&trace.i)
        .filter(|(t, _)| **t >= start && **t < end)
        .map(|(_, v)| *v)
        .collect();
    if !(end > start) || samples.len() < 2 {
        return Err(Error::Domain(format!("degenerate window [{start}, {end})")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let span = end - start;
    let correlated = (2.0 * noise.filter_time() / span).max(1.0 / n);
    let sem = (var * correlated).sqrt();
    let branch = if mean > threshold { Branch::High } else { Branch::Low };
    let gap = (mean - threshold).abs();
    let margin = if sem > 0.0 { gap / sem } else { f64::INFINITY };
    Ok((branch, margin))
}

/// Probability of misassigning a Gaussian-distributed window mean whose
/// plateau separation is `snr` standard deviations.
pub fn discrimination_error(snr: f64) -> f64 {
    0.5 * libm::erfc(snr / (2.0 * std::f64::consts::SQRT_2))
}

/// Separation of the window-averaged plateaus in units of the standard
/// deviation of the average, for white noise averaged over `window` ns.
pub fn averaged_snr(noise: &NoiseChain, frame: &TraceFrame, f_drive: f64, window: f64) -> f64 {
    let sigma = noise.sigma_amplitude(f_drive) / frame.separation;
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    let samples = window / noise.dt;
    samples.sqrt() / sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;
    use crate::jba::{spinodals, PowerReference};

    fn setup() -> (JbaOperatingPoint, ReadoutPulse, f64) {
        let d = DeviceParams::default();
        let kappa = d.kappa();
        let two_pi = 2.0 * std::f64::consts::PI;
        let point = JbaOperatingPoint::new(6.43, two_pi * 17e6, kappa, d.kerr_angular()).unwrap();
        let sp = spinodals(&point).unwrap();
        // sample slightly below the switching threshold, hold inside the window
        let flux = 0.98 * sp.eps2_up / kappa;
        let power = PowerReference::new(&d, 6.43);
        let p_s = power.power_db(0.98 * sp.eps2_up);
        let pulse = ReadoutPulse::new(6.43, p_s, 15.0, 250.0, 700.0).unwrap();
        (point, pulse, flux)
    }

    fn shot(t: Option<f64>) -> ShotRecord {
        ShotRecord {
            prepared_state: 1,
            final_state: 1,
            jumps: vec![],
            bifurcated: t.is_some(),
            bifurcation_time: t,
            trace: None,
            seed: ShotSeed { master: 0, point: 0, shot: 0 },
        }
    }

    #[test]
    fn noiseless_plateaus() {
        let (point, pulse, flux) = setup();
        let quiet = NoiseChain::new(0.0, 10.0, 1.0).unwrap();
        let seed = ShotSeed { master: 1, point: 0, shot: 0 };
        let up = homodyne_trace(&shot(Some(100.0)), &point, &pulse, flux, &quiet, seed).unwrap();
        let flat = homodyne_trace(&shot(None), &point, &pulse, flux, &quiet, seed).unwrap();
        let last = up.i.len() - 1;
        assert!((up.i[last] - 1.0).abs() < 1e-6, "{}", up.i[last]);
        assert!(up.q[last].abs() < 1e-6);
        assert!(flat.i[last].abs() < 1e-6);
        assert!(flat.q[last].abs() < 1e-6);
        let window = (600.0, 965.0);
        let (b, m) = discriminate(&up, window, 0.5, &quiet).unwrap();
        assert_eq!(b, Branch::High);
        assert!(m > 1e6, "{m}");
        assert_eq!(discriminate(&flat, window, 0.5, &quiet).unwrap().0, Branch::Low);
        assert!(discriminate(&flat, (10.0, 10.0), 0.5, &quiet).is_err());
    }

    #[test]
    fn no_step_without_switching() {
        let (point, pulse, flux) = setup();
        let chain = NoiseChain::new(3.0, 10.0, 1.0).unwrap();
        let seed = ShotSeed { master: 2, point: 0, shot: 0 };
        let tr = homodyne_trace(&shot(None), &point, &pulse, flux, &chain, seed).unwrap();
        let mean = |a: f64, b: f64| {
            let v: Vec<f64> = tr
                .t_ns
                .iter()
                .zip(&tr.i)
                .filter(|(t, _)| **t >= a && **t < b)
                .map(|(_, v)| *v)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        // sampling plateau differs from hold plateau only through the power step
        // filtered noise gives a window-mean spread of about 0.1 trace units
        assert!(mean(600.0, 960.0).abs() < 0.5);
        assert!((mean(300.0, 600.0) - mean(600.0, 960.0)).abs() < 0.5);
    }

    #[test]
    fn ensemble_classification() {
        let (point, pulse, flux) = setup();
        let chain = NoiseChain::new(3.0, 10.0, 1.0).unwrap();
        let mut wrong = 0;
        let mut confident = 0;
        for k in 0..200u64 {
            let rec = shot(if k % 3 == 0 { Some(50.0) } else { None });
            let seed = ShotSeed { master: 3, point: 0, shot: k };
            let tr = homodyne_trace(&rec, &point, &pulse, flux, &chain, seed).unwrap();
            let (b, margin) = discriminate(&tr, (300.0, 965.0), 0.5, &chain).unwrap();
            if margin > 5.0 {
                confident += 1;
                if (b == Branch::High) != rec.bifurcated {
                    wrong += 1;
                }
            }
        }
        assert!(confident > 100, "{confident}");
        assert_eq!(wrong, 0);
    }

    #[test]
    fn error_function_values() {
        assert!((discrimination_error(0.0) - 0.5).abs() < 1e-15);
        // 0.5 erfc(1) = 0.078649603...
        assert!((discrimination_error(2.0 * std::f64::consts::SQRT_2) - 0.078_649_603).abs() < 1e-8);
        assert!(discrimination_error(10.0) < 1e-3);
    }

    #[test]
    fn hold_averaging_resolves_branches() {
        let (point, pulse, flux) = setup();
        let chain = NoiseChain::new(3.0, 10.0, 1.0).unwrap();
        let frame = TraceFrame::new(&point, flux * pulse.envelope(500.0)).unwrap();
        let snr = averaged_snr(&chain, &frame, pulse.f_drive, pulse.t_hold);
        assert!(discrimination_error(snr) < 1e-3, "snr {snr}");
    }
}
