// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Relaxation and dephasing models.
//!
//! Relaxation is a Purcell channel through the resonator plus a constant
//! intrinsic channel. Pure dephasing comes from first-order coupling to 1/f
//! flux noise: for a single-sided spectral density S(f) = A^2 / f and a
//! Gaussian accumulated phase, the free-decay coherence falls as
//! exp[-(2 pi A D t)^2 ln(1 / (2 pi f_ir t)) / 2], D = |df01/dphi|. The 1/e
//! time is solved self-consistently because the logarithm depends on it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{f01_at_flux, DeviceParams, TransmonSpectrum};
use crate::error::{Error, Result};

/// Cap (us) reported when first-order flux dephasing vanishes.
pub const SECOND_ORDER_CAP_US: f64 = 100.0;

const FLUX_STEP: f64 = 1e-4;
const INFRARED_CUTOFF_HZ: f64 = 1.0;
const T2_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationTimes {
    /// Combined relaxation time (us).
    pub t1: f64,
    /// Purcell-limited part (us).
    pub t1_purcell: f64,
}

/// Relaxation through the resonator, kappa (g / Delta)^2, combined with the
/// intrinsic channel.
pub fn purcell_t1(device: &DeviceParams, delta: f64) -> Result<RelaxationTimes> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::Singular(format!(
            "Purcell rate diverges at qubit-cavity detuning {delta}"
        )));
    }
    let gamma_purcell = device.kappa() * (device.coupling / delta).powi(2); // 1/s
    let t1_purcell = 1e6 / gamma_purcell;
    let t1 = 1.0 / (1.0 / t1_purcell + 1.0 / device.t1_int_us);
    Ok(RelaxationTimes { t1, t1_purcell })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingTime {
    /// Pure dephasing time (us).
    pub t_phi: f64,
    /// |df01/dphi| (GHz per flux quantum).
    pub sensitivity: f64,
    /// Set when first-order dephasing vanishes (or is weaker than the cap)
    /// and `t_phi` holds [`SECOND_ORDER_CAP_US`].
    pub second_order_limited: bool,
}

fn sensitivity(f01: &impl Fn(f64) -> Result<f64>, flux: f64, step: f64) -> Result<f64> {
    Ok((f01(flux + step)? - f01(flux - step)?) / (2.0 * step))
}

/// Pure dephasing time from 1/f flux noise at a flux bias.
///
/// `f01_of_flux` maps flux (flux quanta) to qubit frequency (GHz); pass
/// [`f01_at_flux`] bound to the device for the full model.
pub fn flux_dephasing_time(
    device: &DeviceParams,
    flux: f64,
    f01_of_flux: impl Fn(f64) -> Result<f64>,
) -> Result<DephasingTime> {
    let coarse = sensitivity(&f01_of_flux, flux, FLUX_STEP)?;
    let fine = sensitivity(&f01_of_flux, flux, FLUX_STEP / 2.0)?;
    // Richardson extrapolation of the symmetric difference.
    let d_ghz = ((4.0 * fine - coarse) / 3.0).abs();
    let capped = DephasingTime {
        t_phi: SECOND_ORDER_CAP_US,
        sensitivity: d_ghz,
        second_order_limited: true,
    };
    if device.flux_noise == 0.0 || d_ghz < 1e-9 {
        return Ok(capped);
    }

    let rate_scale = 2.0 * PI * device.flux_noise * d_ghz * 1e9; // 1/s
    let mut t = 1.0 / rate_scale;
    for _ in 0..200 {
        let log = (1.0 / (2.0 * PI * INFRARED_CUTOFF_HZ * t)).ln();
        if log <= 0.0 {
            return Ok(capped);
        }
        let next = 1.0 / (rate_scale * (0.5 * log).sqrt());
        if (next - t).abs() <= 1e-6 * next {
            let t_phi = next * 1e6;
            if t_phi > SECOND_ORDER_CAP_US {
                return Ok(capped);
            }
            return Ok(DephasingTime {
                t_phi,
                sensitivity: d_ghz,
                second_order_limited: false,
            });
        }
        t = next;
    }
    Err(Error::Convergence(
        "self-consistent dephasing time did not settle".into(),
    ))
}

/// Pure dephasing from measured relaxation and Ramsey times, all in us.
/// Returns `f64::INFINITY` when T2 = 2 T1 (relaxation limited).
pub fn extract_tphi(t1: f64, t2: f64) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(Error::param("T1", "must be > 0"));
    }
    if !(t2 > 0.0) {
        return Err(Error::param("T2", "must be > 0"));
    }
    let two_t1 = 2.0 * t1;
    if t2 > two_t1 * (1.0 + T2_TOLERANCE) {
        return Err(Error::InconsistentCoherence { t2, two_t1 });
    }
    if t2 >= two_t1 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (1.0 / t2 - 1.0 / two_t1))
}

/// Ramsey time from relaxation and pure dephasing (us).
pub fn compose_t2(t1: f64, t_phi: f64) -> f64 {
    1.0 / (1.0 / (2.0 * t1) + 1.0 / t_phi)
}

/// Coherence times of the qubit at one bias point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceBudget {
    pub t1: f64,
    pub t1_purcell: f64,
    pub t2: f64,
    pub t_phi: f64,
    /// Decay rate |2> -> |1> (1/us).
    pub rate_21: f64,
    /// Decay rate |1> -> |0> (1/us).
    pub rate_10: f64,
}

impl CoherenceBudget {
    /// Budget for a transmon tuned to `spectrum` on `device`.
    ///
    /// The 2 -> 1 channel uses the 1-2 charge matrix element both for its
    /// Purcell part (detuned by f_C - f12) and for the intrinsic channel.
    pub fn for_spectrum(device: &DeviceParams, spectrum: &TransmonSpectrum) -> Result<Self> {
        let delta = device.cavity_freq - spectrum.f01;
        let relax = purcell_t1(device, delta)?;
        let c1 = spectrum.charge_elems[1];
        let delta12 = device.cavity_freq - spectrum.f12;
        if delta12 == 0.0 {
            return Err(Error::Singular("1-2 transition resonant with cavity".into()));
        }
        let purcell_21 = device.kappa() * (device.coupling * c1 / delta12).powi(2) * 1e-6;
        let rate_21 = purcell_21 + c1 * c1 / device.t1_int_us;
        let dephasing =
            flux_dephasing_time(device, spectrum.flux, |phi| f01_at_flux(device, phi))?;
        Ok(Self {
            t1: relax.t1,
            t1_purcell: relax.t1_purcell,
            t2: compose_t2(relax.t1, dephasing.t_phi),
            t_phi: dephasing.t_phi,
            rate_21,
            rate_10: 1.0 / relax.t1,
        })
    }

    /// Budget with explicit cascade times and no dephasing information.
    pub fn from_times(t1_10: f64, t1_21: f64) -> Self {
        Self {
            t1: t1_10,
            t1_purcell: f64::INFINITY,
            t2: 2.0 * t1_10,
            t_phi: f64::INFINITY,
            rate_21: if t1_21.is_finite() { 1.0 / t1_21 } else { 0.0 },
            rate_10: if t1_10.is_finite() { 1.0 / t1_10 } else { 0.0 },
        }
    }

    /// Budget with every decay channel switched off.
    pub fn frozen() -> Self {
        Self::from_times(f64::INFINITY, f64::INFINITY)
    }

    pub fn t1_21(&self) -> f64 {
        1.0 / self.rate_21
    }
}
