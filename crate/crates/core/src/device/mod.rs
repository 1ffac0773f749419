// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Static physics of the transmon and its cavity: charge-basis spectrum,
//! flux tuning, dressing by the resonator field and coherence budgets.

mod coherence;
mod dressing;
mod transmon;

pub use coherence::{
    compose_t2, extract_tphi, flux_dephasing_time, purcell_t1, CoherenceBudget, DephasingTime,
    RelaxationTimes, SECOND_ORDER_CAP_US,
};
pub use dressing::{dress_system, stark_invert, DispersiveMap};
pub use transmon::{
    diagonalize_transmon, f01_at_flux, flux_for_f01, flux_tune, spectrum_at_flux,
    TransmonSpectrum, DEFAULT_CHARGE_CUTOFF, DEFAULT_LEVELS,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Circuit constants of the transmon + nonlinear resonator sample.
///
/// Frequencies are in GHz except the Kerr constant (MHz per photon), times in
/// microseconds, flux noise in units of the flux quantum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Bare cavity frequency (GHz).
    #[serde(rename = "f_C")]
    pub cavity_freq: f64,
    /// Loaded quality factor.
    #[serde(rename = "Q0")]
    pub quality: f64,
    /// Junction critical current (uA). Carried as metadata only.
    #[serde(rename = "I_C", default = "default_critical_current")]
    pub critical_current_ua: f64,
    /// Kerr shift per photon (MHz), negative for a softening nonlinearity.
    #[serde(rename = "K", default = "default_kerr")]
    pub kerr_mhz: f64,
    /// Qubit-cavity coupling (GHz).
    #[serde(rename = "g")]
    pub coupling: f64,
    /// Josephson energy at zero flux (GHz).
    #[serde(rename = "E_J_max")]
    pub ej_max: f64,
    /// Cooper-pair charging energy (GHz).
    #[serde(rename = "E_c")]
    pub ec: f64,
    /// SQUID junction asymmetry, 0 for a symmetric loop.
    #[serde(rename = "d", default)]
    pub squid_asymmetry: f64,
    /// Relaxation time of the non-radiative channel (us).
    #[serde(rename = "T1_int")]
    pub t1_int_us: f64,
    /// 1/f flux-noise amplitude at 1 Hz (flux quanta per sqrt(Hz)).
    #[serde(rename = "A_flux")]
    pub flux_noise: f64,
    /// Referred amplifier noise temperature (K).
    #[serde(rename = "T_N")]
    pub noise_temp_k: f64,
    /// Attenuation from the refrigerator input to the sample (dB, negative).
    #[serde(rename = "atten_dB")]
    pub atten_db: f64,
}

fn default_critical_current() -> f64 {
    0.72
}

fn default_kerr() -> f64 {
    DEFAULT_KERR_MHZ
}

/// Kerr constant putting the upward bifurcation at 5-10 photons for drive
/// detunings of 17-33 MHz with the sample's linewidth.
pub const DEFAULT_KERR_MHZ: f64 = -1.2;

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            cavity_freq: 6.4535,
            quality: 685.0,
            critical_current_ua: default_critical_current(),
            kerr_mhz: DEFAULT_KERR_MHZ,
            coupling: 0.044,
            ej_max: 21.0,
            ec: 1.2,
            squid_asymmetry: 0.0,
            t1_int_us: 0.7,
            flux_noise: 2e-5,
            noise_temp_k: 3.0,
            atten_db: -77.0,
        }
    }
}

impl DeviceParams {
    /// Checks the physical invariants. Error messages name the JSON key.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("f_C", self.cavity_freq),
            ("Q0", self.quality),
            ("I_C", self.critical_current_ua),
            ("K", self.kerr_mhz),
            ("g", self.coupling),
            ("E_J_max", self.ej_max),
            ("E_c", self.ec),
            ("d", self.squid_asymmetry),
            ("A_flux", self.flux_noise),
            ("T_N", self.noise_temp_k),
            ("atten_dB", self.atten_db),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.cavity_freq <= 0.0 {
            return Err(Error::param("f_C", "must be > 0"));
        }
        if self.quality <= 1.0 {
            return Err(Error::param("Q0", "must be > 1"));
        }
        if self.coupling <= 0.0 {
            return Err(Error::param("g", "must be > 0"));
        }
        if self.ec <= 0.0 {
            return Err(Error::param("E_c", "must be > 0"));
        }
        if self.ej_max <= self.ec {
            return Err(Error::param("E_J_max", "must exceed E_c"));
        }
        if self.kerr_mhz >= 0.0 {
            return Err(Error::param("K", "must be negative (softening)"));
        }
        if !(self.t1_int_us > 0.0) {
            return Err(Error::param("T1_int", "must be > 0"));
        }
        if self.flux_noise < 0.0 {
            return Err(Error::param("A_flux", "must be >= 0"));
        }
        if self.noise_temp_k < 0.0 {
            return Err(Error::param("T_N", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.squid_asymmetry) {
            return Err(Error::param("d", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Cavity energy decay rate kappa = 2 pi f_C / Q0 (rad/s).
    pub fn kappa(&self) -> f64 {
        2.0 * PI * self.cavity_freq * 1e9 / self.quality
    }

    /// Angular Kerr constant 2 pi K (rad/s per photon, negative).
    pub fn kerr_angular(&self) -> f64 {
        2.0 * PI * self.kerr_mhz * 1e6
    }

    /// Stable digest of the parameter block, used in run metadata.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("device params serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
