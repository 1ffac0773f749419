// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::setup::Setup;
use crate::error::{Error, Result};
use crate::jba::SCurveModel;
use crate::readout::{scurve_expected, Populations, ReadoutPulse};

/// Upper edge of the switching probabilities compared when matching curves.
pub const LOW_PB: f64 = 0.3;

/// Largest `a - b` and the index where it occurs.
pub fn max_contrast(a: &[f64], b: &[f64]) -> (f64, usize) {
    a.iter()
        .zip(b)
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |best, (k, (x, y))| {
            if x - y > best.0 {
                (x - y, k)
            } else {
                best
            }
        })
}

/// Maximizer of a unimodal function on `[lo, hi]` to within `tol`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Weight of the shifted reference curve.
    pub w: f64,
    pub clipped: bool,
}

impl Decomposition {
    pub fn weights(&self) -> (f64, f64) {
        (self.w, 1.0 - self.w)
    }
}

fn same_grid(a: &SCurveModel, b: &SCurveModel) -> Result<()> {
    if a.grid.len() != b.grid.len() || a.grid.iter().zip(&b.grid).any(|(x, y)| (x - y).abs() > 1e-9) {
        return Err(Error::GridMismatch(format!(
            "curves {} and {} use different power grids",
            a.label, b.label
        )));
    }
    Ok(())
}

/// Least-squares weight w in [0, 1] with
/// target ~ w * shifted + (1 - w) * reference.
pub fn scurve_decompose(
    target: &SCurveModel,
    reference: &SCurveModel,
    shifted: &SCurveModel,
) -> Result<Decomposition> {
    same_grid(target, reference)?;
    same_grid(target, shifted)?;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..target.grid.len() {
        let d = shifted.p_b[k] - reference.p_b[k];
        num += d * (target.p_b[k] - reference.p_b[k]);
        den += d * d;
    }
    if den == 0.0 {
        return Err(Error::Domain("reference curves coincide".into()));
    }
    let w = num / den;
    Ok(Decomposition {
        w: w.clamp(0.0, 1.0),
        clipped: !(0.0..=1.0).contains(&w),
    })
}

/// Readout frequency shift (MHz) that makes the generated reference curve
/// match `s1` where `s1` switches with probability below [`LOW_PB`].
/// Searched over `bracket` (MHz).
pub fn scurve_shift_match(
    s1: &SCurveModel,
    generator: impl Fn(f64) -> Result<SCurveModel>,
    bracket: (f64, f64),
) -> Result<f64> {
    let low: Vec<usize> = (0..s1.grid.len()).filter(|&k| s1.p_b[k] < LOW_PB).collect();
    if !low.iter().any(|&k| s1.p_b[k] > 0.0) {
        return Err(Error::Domain(format!(
            "no switching probabilities in (0, {LOW_PB}) to match"
        )));
    }
    let cost = |shift: f64| -> Result<f64> {
        let s0 = generator(shift)?;
        same_grid(s1, &s0)?;
        Ok(low.iter().map(|&k| (s1.p_b[k] - s0.p_b[k]).powi(2)).sum())
    };
    let (lo, hi) = bracket;
    let step = 0.1;
    let steps = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=steps {
        let shift = (lo + k as f64 * step).min(hi);
        let c = cost(shift)?;
        if c < best.0 {
            best = (c, shift);
        }
    }
    let (a, b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let mut failure = None;
    let refined = golden_section(
        |s| match cost(s) {
            Ok(c) => -c,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        a,
        b,
        1e-4,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(refined)
}

/// Expected S-curve of `pop` with the readout frequency raised by `shift`
/// MHz, for use as a [`scurve_shift_match`] generator.
pub fn shifted_scurve(
    setup: &Setup,
    pulse: &ReadoutPulse,
    pop: &Populations,
    grid: &[f64],
    shift_mhz: f64,
) -> Result<SCurveModel> {
    let mut p = *pulse;
    p.f_drive += shift_mhz * 1e-3;
    let model = setup.model(p.f_drive)?;
    scurve_expected(&model, &p, pop, grid, &format!("S0{shift_mhz:+}"))
}
