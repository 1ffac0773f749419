// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::DeviceParams;
use crate::error::{Error, Result};

/// Number of transmon levels kept by default. Eight levels keep the dressed
/// ladder converged well past a hundred photons.
pub const DEFAULT_LEVELS: usize = 8;
pub const DEFAULT_CHARGE_CUTOFF: usize = 20;

const CONVERGENCE_TOL: f64 = 1e-6;

/// Low-lying spectrum of a transmon at one flux bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpectrum {
    /// Flux bias in units of the flux quantum.
    pub flux: f64,
    /// Eigenfrequencies relative to the ground state (GHz), ascending.
    pub levels: Vec<f64>,
    pub f01: f64,
    pub f12: f64,
    /// Anharmonicity f12 - f01 (GHz).
    pub alpha: f64,
    /// |<i|n|i+1>| / |<0|n|1>| for i = 0..levels-2.
    pub charge_elems: Vec<f64>,
}

impl TransmonSpectrum {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

fn charge_basis_eigen(ej: f64, ec: f64, cutoff: usize) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let dim = 2 * cutoff + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let n = k as f64 - cutoff as f64;
        h[(k, k)] = ec * n * n;
        if k + 1 < dim {
            // cos(theta) = (|n><n+1| + h.c.) / 2
            h[(k, k + 1)] = -ej / 2.0;
            h[(k + 1, k)] = -ej / 2.0;
        }
    }
    SymmetricEigen::new(h)
}

fn solve(ej: f64, ec: f64, n_levels: usize, cutoff: usize) -> (Vec<f64>, Vec<f64>) {
    let eig = charge_basis_eigen(ej, ec, cutoff);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let ground = eig.eigenvalues[order[0]];
    let levels: Vec<f64> = order[..n_levels]
        .iter()
        .map(|&k| eig.eigenvalues[k] - ground)
        .collect();

    let dim = 2 * cutoff + 1;
    let charge = |a: usize, b: usize| -> f64 {
        let va = eig.eigenvectors.column(order[a]);
        let vb = eig.eigenvectors.column(order[b]);
        (0..dim)
            .map(|k| va[k] * (k as f64 - cutoff as f64) * vb[k])
            .sum::<f64>()
            .abs()
    };
    let elems: Vec<f64> = (0..n_levels - 1).map(|i| charge(i, i + 1)).collect();
    let norm = elems[0];
    let charge_elems = elems
        .iter()
        .map(|e| if norm > 0.0 { e / norm } else { 0.0 })
        .collect();
    (levels, charge_elems)
}

/// Diagonalizes H = E_c n^2 - E_J cos(theta) in the Cooper-pair charge basis
/// n in [-cutoff, cutoff]. The result is checked against a run at twice the
/// cutoff; if f01 moves by more than 1e-6 relative a convergence error is
/// returned instead of a truncated spectrum.
pub fn diagonalize_transmon(
    ej: f64,
    ec: f64,
    n_levels: usize,
    charge_cutoff: usize,
) -> Result<TransmonSpectrum> {
    if !(ej > 0.0) || !ej.is_finite() {
        return Err(Error::param("E_J", "must be > 0"));
    }
    if !(ec > 0.0) || !ec.is_finite() {
        return Err(Error::param("E_c", "must be > 0"));
    }
    if charge_cutoff < 10 {
        return Err(Error::param("charge_cutoff", "must be >= 10"));
    }
    if n_levels < 3 || n_levels > charge_cutoff {
        return Err(Error::param(
            "n_levels",
            format!("must lie in [3, charge_cutoff = {charge_cutoff}]"),
        ));
    }

    let (levels, charge_elems) = solve(ej, ec, n_levels, charge_cutoff);
    let (check, _) = solve(ej, ec, 2, 2 * charge_cutoff);
    let rel = (levels[1] - check[1]).abs() / levels[1].abs().max(f64::MIN_POSITIVE);
    if rel >= CONVERGENCE_TOL {
        return Err(Error::Convergence(format!(
            "f01 changed by {rel:.2e} relative when doubling the charge cutoff {charge_cutoff}"
        )));
    }

    let f01 = levels[1];
    let f12 = levels[2] - levels[1];
    Ok(TransmonSpectrum {
        flux: 0.0,
        f01,
        f12,
        alpha: f12 - f01,
        levels,
        charge_elems,
    })
}

/// Josephson energy of the SQUID at flux bias `flux` (flux quanta).
pub fn flux_tune(device: &DeviceParams, flux: f64) -> f64 {
    // reduce first so that shifts by whole flux quanta are exact
    let (s, c) = (PI * flux.rem_euclid(1.0)).sin_cos();
    let d = device.squid_asymmetry;
    device.ej_max * (c * c + d * d * s * s).sqrt()
}

/// Spectrum with the default truncation at a given flux bias.
pub fn spectrum_at_flux(device: &DeviceParams, flux: f64) -> Result<TransmonSpectrum> {
    let ej = flux_tune(device, flux);
    let mut spec = diagonalize_transmon(ej, device.ec, DEFAULT_LEVELS, DEFAULT_CHARGE_CUTOFF)?;
    spec.flux = flux;
    Ok(spec)
}

pub fn f01_at_flux(device: &DeviceParams, flux: f64) -> Result<f64> {
    Ok(spectrum_at_flux(device, flux)?.f01)
}

/// Flux bias in [0, 1/2] at which the qubit frequency equals `target_f01`.
///
/// f01 falls monotonically from the sweet spot at zero flux to the SQUID
/// node at half a flux quantum, so bisection is enough.
pub fn flux_for_f01(device: &DeviceParams, target_f01: f64) -> Result<f64> {
    // The E_J -> 0 end is not a transmon any more; stop just short of it.
    let mut lo = 0.0;
    let mut hi = 0.5 - 1e-9;
    let f_lo = f01_at_flux(device, lo)?;
    let f_hi = f01_at_flux(device, hi).unwrap_or(0.0);
    if target_f01 > f_lo || target_f01 < f_hi {
        return Err(Error::OutOfRange {
            value: target_f01,
            lo: f_hi,
            hi: f_lo,
        });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let f = f01_at_flux(device, mid)?;
        if f > target_f01 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
