// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::device::{
    dress_system, flux_for_f01, spectrum_at_flux, CoherenceBudget, DeviceParams, DispersiveMap,
    TransmonSpectrum,
};
use crate::error::{Error, Result};
use crate::jba::EscapeModel;
use crate::readout::{Preparation, ReadoutModel};

/// Photon numbers tabulated for the Stark map.
pub const STARK_PHOTONS: usize = 200;

/// Device tuned to one qubit-cavity detuning, with everything the
/// experiments derive from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub device: DeviceParams,
    /// f_C - f01 (GHz).
    pub delta: f64,
    pub flux: f64,
    pub spectrum: TransmonSpectrum,
    pub map: DispersiveMap,
    pub budget: CoherenceBudget,
    pub escape: EscapeModel,
    pub prep: Preparation,
}

impl Setup {
    pub fn new(device: &DeviceParams, delta: f64) -> Result<Self> {
        device.validate()?;
        if !(delta > 0.0) {
            return Err(Error::param("delta", "qubit must sit below the cavity (delta > 0)"));
        }
        let flux = flux_for_f01(device, device.cavity_freq - delta)?;
        let spectrum = spectrum_at_flux(device, flux)?;
        let map = dress_system(device, &spectrum, STARK_PHOTONS)?;
        let budget = CoherenceBudget::for_spectrum(device, &spectrum)?;
        Ok(Self {
            device: device.clone(),
            delta,
            flux,
            spectrum,
            map,
            budget,
            escape: EscapeModel::calibrated(device.kappa()),
            prep: Preparation::default(),
        })
    }

    pub fn with_escape(mut self, escape: EscapeModel) -> Self {
        self.escape = escape;
        self
    }

    pub fn with_prep(mut self, prep: Preparation) -> Self {
        self.prep = prep;
        self
    }

    pub fn with_budget(mut self, budget: CoherenceBudget) -> Self {
        self.budget = budget;
        self
    }

    /// Readout frequency `offset_mhz` below the bare cavity (GHz).
    pub fn readout_frequency(&self, offset_mhz: f64) -> f64 {
        self.device.cavity_freq - offset_mhz * 1e-3
    }

    pub fn model(&self, f_drive: f64) -> Result<ReadoutModel> {
        ReadoutModel::new(
            &self.device,
            &self.map,
            f_drive,
            self.escape,
            self.budget.clone(),
        )
    }
}
