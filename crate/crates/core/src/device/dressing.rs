// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Transmon dressed by the resonator mode.
//!
//! The coupling g * sum_i c_i (|i><i+1| a^dag + h.c.) conserves the excitation
//! number N = i + n, so the Hamiltonian splits into tridiagonal blocks spanned
//! by |i, N - i>. Each block is irreducible for g > 0, its eigenvalues never
//! cross as g is switched on, and the k-th lowest dressed level therefore
//! continues the k-th lowest bare level. That gives an exact labeling of the
//! dressed states |i~, n> even far beyond the critical photon number.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{DeviceParams, TransmonSpectrum};
use crate::error::{Error, Result};

/// Minimum number of transmon levels used in the dressing.
const MIN_LEVELS: usize = 5;
/// Largest tolerated change (GHz) of any tabulated quantity when the top
/// transmon level is dropped from the truncation.
const TRUNCATION_TOL_GHZ: f64 = 1e-4;

/// State-dependent cavity frequencies and the AC-Stark map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersiveMap {
    /// Qubit-cavity detuning f_C - f01 (GHz).
    pub delta: f64,
    /// Dressed cavity frequency with the qubit in |0>, |1>, |2> (GHz).
    pub f_ci: [f64; 3],
    /// f_C0 - f_C1 (MHz).
    pub pull_01: f64,
    /// f_C0 - f_C2 (MHz).
    pub pull_02: f64,
    /// Dressed qubit frequency f01(n) for n = 0..=n_max (GHz).
    pub stark: Vec<f64>,
}

impl DispersiveMap {
    pub fn cavity_freq(&self, state: usize) -> f64 {
        self.f_ci[state.min(2)]
    }

    pub fn n_max(&self) -> usize {
        self.stark.len() - 1
    }

    /// f01 at a fractional photon number, linear between tabulated points.
    pub fn stark_at(&self, n: f64) -> Result<f64> {
        let n_max = self.n_max() as f64;
        if !(0.0..=n_max).contains(&n) {
            return Err(Error::OutOfRange {
                value: n,
                lo: 0.0,
                hi: n_max,
            });
        }
        let k = (n.floor() as usize).min(self.n_max().saturating_sub(1));
        let frac = n - k as f64;
        Ok(self.stark[k] + frac * (self.stark[k + 1] - self.stark[k]))
    }
}

struct DressedLadder {
    /// energies[N][i]: dressed level continuing |i, N - i>.
    energies: Vec<Vec<f64>>,
}

impl DressedLadder {
    fn level(&self, qubit: usize, photons: usize) -> f64 {
        self.energies[qubit + photons][qubit]
    }
}

fn build_ladder(
    spectrum: &TransmonSpectrum,
    f_c: f64,
    g: f64,
    n_levels: usize,
    max_excitations: usize,
) -> DressedLadder {
    let energies = (0..=max_excitations)
        .map(|n_exc| {
            let top = (n_levels - 1).min(n_exc);
            let dim = top + 1;
            let bare: Vec<f64> = (0..dim)
                .map(|i| spectrum.levels[i] + (n_exc - i) as f64 * f_c)
                .collect();
            let mut h = DMatrix::<f64>::zeros(dim, dim);
            for i in 0..dim {
                h[(i, i)] = bare[i];
                if i + 1 < dim {
                    let photons = (n_exc - i) as f64;
                    let v = g * spectrum.charge_elems[i] * photons.sqrt();
                    h[(i, i + 1)] = v;
                    h[(i + 1, i)] = v;
                }
            }
            let mut dressed: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
            dressed.sort_by(f64::total_cmp);
            let mut by_bare: Vec<usize> = (0..dim).collect();
            by_bare.sort_by(|&a, &b| bare[a].total_cmp(&bare[b]));
            let mut out = vec![0.0; dim];
            for (rank, &i) in by_bare.iter().enumerate() {
                out[i] = dressed[rank];
            }
            out
        })
        .collect();
    DressedLadder { energies }
}

fn tabulate(
    spectrum: &TransmonSpectrum,
    device: &DeviceParams,
    n_levels: usize,
    n_photons_max: usize,
) -> ([f64; 3], Vec<f64>) {
    let ladder = build_ladder(
        spectrum,
        device.cavity_freq,
        device.coupling,
        n_levels,
        n_photons_max + 3,
    );
    let f_ci = [0, 1, 2].map(|i| ladder.level(i, 1) - ladder.level(i, 0));
    let stark = (0..=n_photons_max)
        .map(|n| ladder.level(1, n) - ladder.level(0, n))
        .collect();
    (f_ci, stark)
}

/// Dressed cavity frequencies, cavity pulls and Stark map for the transmon
/// coupled to the resonator.
pub fn dress_system(
    device: &DeviceParams,
    spectrum: &TransmonSpectrum,
    n_photons_max: usize,
) -> Result<DispersiveMap> {
    if n_photons_max < 1 {
        return Err(Error::param("n_photons_max", "must be >= 1"));
    }
    let n_levels = spectrum.n_levels();
    if n_levels < MIN_LEVELS {
        return Err(Error::param(
            "spectrum",
            format!("needs at least {MIN_LEVELS} transmon levels, got {n_levels}"),
        ));
    }
    let delta = device.cavity_freq - spectrum.f01;
    if delta.abs() <= device.coupling {
        return Err(Error::NotDispersive(format!(
            "|f_C - f01| = {:.4} GHz does not exceed g = {:.4} GHz",
            delta.abs(),
            device.coupling
        )));
    }
    // Nearby transitions to higher levels also have to stay detuned.
    let f12_gap = device.cavity_freq - spectrum.f12;
    if f12_gap.abs() <= device.coupling * spectrum.charge_elems[1] {
        return Err(Error::NotDispersive(format!(
            "the 1-2 transition lies {:.4} GHz from the cavity",
            f12_gap
        )));
    }

    let (f_ci, stark) = tabulate(spectrum, device, n_levels, n_photons_max);
    let (f_ci_low, stark_low) = tabulate(spectrum, device, n_levels - 1, n_photons_max);
    let drift = f_ci
        .iter()
        .zip(&f_ci_low)
        .chain(stark.iter().zip(&stark_low))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > TRUNCATION_TOL_GHZ {
        return Err(Error::Convergence(format!(
            "dressed levels moved by {drift:.2e} GHz when dropping the top of {n_levels} transmon levels"
        )));
    }

    Ok(DispersiveMap {
        delta,
        pull_01: (f_ci[0] - f_ci[1]) * 1e3,
        pull_02: (f_ci[0] - f_ci[2]) * 1e3,
        f_ci,
        stark,
    })
}

/// Photon number at which the Stark-shifted qubit frequency equals
/// `f01_shifted`, by linear interpolation of the monotone table.
pub fn stark_invert(map: &DispersiveMap, f01_shifted: f64) -> Result<f64> {
    let first = map.stark[0];
    let last = *map.stark.last().expect("non-empty stark table");
    let (lo, hi) = (first.min(last), first.max(last));
    if !(lo..=hi).contains(&f01_shifted) {
        return Err(Error::OutOfRange {
            value: f01_shifted,
            lo,
            hi,
        });
    }
    let decreasing = last < first;
    for (k, w) in map.stark.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let inside = if decreasing {
            f01_shifted <= a && f01_shifted >= b
        } else {
            f01_shifted >= a && f01_shifted <= b
        };
        if inside {
            if a == b {
                return Ok(k as f64);
            }
            return Ok(k as f64 + (f01_shifted - a) / (b - a));
        }
    }
    Err(Error::Domain("stark table is not monotone".into()))
}
