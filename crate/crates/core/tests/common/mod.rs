// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Oracles shared by the integration tests.

#![allow(dead_code)]

use jba_readout::jba::JbaOperatingPoint;

/// Cells of the dense sign-change scan.
pub const GRID: usize = 1000;

/// Real roots of x^3 + a x^2 + b x + c, ascending.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Steady-state photon numbers from the closed-form cubic, in the
/// dimensionless form x^3 - 2 x^2 + (1 + 1/Omega^2) x - y = 0 with
/// n = x delta / |K| and y = eps^2 |K| / delta^3.
pub fn closed_form_roots(p: &JbaOperatingPoint, e2: f64) -> Vec<f64> {
    let k = p.kerr.abs();
    let y = e2 * k / p.delta.powi(3);
    let scale = p.delta / k;
    cubic_roots(-2.0, 1.0 + 1.0 / (p.omega * p.omega), -y)
        .into_iter()
        .map(|x| x * scale)
        .collect()
}

/// Upper bound on every root: past 2 delta / |K| the bracket exceeds
/// (|K| n / 2)^2, so n^3 K^2 / 4 <= eps^2.
pub fn scan_limit(p: &JbaOperatingPoint, e2: f64) -> f64 {
    let k = p.kerr.abs();
    (2.0 * p.delta / k).max((4.0 * e2 / (k * k)).cbrt()) * 1.05
}

pub fn dense_scan(p: &JbaOperatingPoint, e2: f64) -> usize {
    let top = scan_limit(p, e2);
    let f = |k: usize| {
        let n = top * k as f64 / GRID as f64;
        let x = p.delta - p.kerr.abs() * n;
        n * (x * x + 0.25 * p.kappa * p.kappa) - e2
    };
    (0..GRID).filter(|&k| (f(k) < 0.0) != (f(k + 1) < 0.0)).count()
}

pub fn point(omega: f64, kappa: f64, kerr_mhz: f64) -> JbaOperatingPoint {
    JbaOperatingPoint::new(6.4, 0.5 * omega * kappa, kappa, 2e6 * std::f64::consts::PI * kerr_mhz).unwrap()
}

/// Drive scale at the inflection photon number 2 delta / (3 |K|).
pub fn drive_scale(p: &JbaOperatingPoint) -> f64 {
    p.drive_for(2.0 * p.delta / (3.0 * p.kerr.abs()))
}
