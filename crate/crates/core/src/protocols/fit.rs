// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Weighted Levenberg-Marquardt fits of damped sinusoids and exponentials.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-9;
const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// off + A exp(-x / tau) sin(2 pi f x + phi)
    DampedSine,
    /// off + A exp(-x / tau)
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    /// sqrt of the weighted residual sum of squares.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Identifiability or sanity warnings.
    pub flags: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let k = self.names.iter().position(|n| n == name)?;
        Some((self.params[k], self.stderr[k]))
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |v| v.0)
    }

    pub fn error(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |v| v.1)
    }

    pub fn flagged(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

trait Model {
    fn eval(&self, x: f64, p: &[f64]) -> f64;
    fn grad(&self, x: f64, p: &[f64], out: &mut [f64]);
}

struct Sine;

impl Model for Sine {
    // p = [off, A, f, phi, rate]
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let w = 2.0 * std::f64::consts::PI * p[2];
        p[0] + p[1] * (-p[4] * x).exp() * (w * x + p[3]).sin()
    }

    fn grad(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let w = 2.0 * std::f64::consts::PI * p[2];
        let e = (-p[4] * x).exp();
        let (s, c) = (w * x + p[3]).sin_cos();
        g[0] = 1.0;
        g[1] = e * s;
        g[2] = p[1] * e * c * 2.0 * std::f64::consts::PI * x;
        g[3] = p[1] * e * c;
        g[4] = -x * p[1] * e * s;
    }
}

struct Exponential;

impl Model for Exponential {
    // p = [off, A, rate]
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] + p[1] * (-p[2] * x).exp()
    }

    fn grad(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let e = (-p[2] * x).exp();
        g[0] = 1.0;
        g[1] = e;
        g[2] = -x * p[1] * e;
    }
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(x: &'a [f64], y: &'a [f64], stderr: Option<&[f64]>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::GridMismatch(format!("{} x values, {} y values", x.len(), y.len())));
        }
        if x.len() < MIN_POINTS {
            return Err(Error::param("x", format!("need at least {MIN_POINTS} points")));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::param("y", "must be finite"));
        }
        let w = match stderr {
            Some(s) if s.len() != x.len() => {
                return Err(Error::GridMismatch("stderr length differs from data".into()))
            }
            // points with zero reported error get the median weight
            Some(s) => {
                let mut pos: Vec<f64> = s.iter().copied().filter(|v| *v > 0.0).collect();
                pos.sort_by(f64::total_cmp);
                let fallback = pos.get(pos.len() / 2).copied().unwrap_or(1.0);
                s.iter()
                    .map(|&v| {
                        let v = if v > 0.0 { v } else { fallback };
                        1.0 / (v * v)
                    })
                    .collect()
            }
            None => vec![1.0; x.len()],
        };
        Ok(Self { x, y, w })
    }

    fn chi2(&self, m: &dyn Model, p: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&x, &y), &w)| w * (y - m.eval(x, p)).powi(2))
            .sum()
    }

    fn normal_equations(&self, m: &dyn Model, p: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let n = p.len();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        let mut g = vec![0.0; n];
        for ((&x, &y), &w) in self.x.iter().zip(self.y).zip(&self.w) {
            m.grad(x, p, &mut g);
            let r = y - m.eval(x, p);
            for i in 0..n {
                b[i] += w * g[i] * r;
                for j in 0..=i {
                    a[(i, j)] += w * g[i] * g[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        (a, b)
    }

    /// Linear least squares of y on the given basis functions.
    fn linear(&self, basis: &[&dyn Fn(f64) -> f64]) -> Option<(Vec<f64>, f64)> {
        let n = basis.len();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        let mut row = vec![0.0; n];
        for ((&x, &y), &w) in self.x.iter().zip(self.y).zip(&self.w) {
            for (k, f) in basis.iter().enumerate() {
                row[k] = f(x);
            }
            for i in 0..n {
                b[i] += w * row[i] * y;
                for j in 0..n {
                    a[(i, j)] += w * row[i] * row[j];
                }
            }
        }
        let coef = a.lu().solve(&b)?;
        let chi2 = self
            .x
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&x, &y), &w)| {
                let fit: f64 = basis.iter().zip(coef.iter()).map(|(f, c)| c * f(x)).sum();
                w * (y - fit).powi(2)
            })
            .sum();
        Some((coef.iter().copied().collect(), chi2))
    }

    fn span(&self) -> f64 {
        let (lo, hi) = self
            .x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    }
}

struct Solution {
    params: Vec<f64>,
    cov: Option<DMatrix<f64>>,
    chi2: f64,
    converged: bool,
    iterations: usize,
}

fn levenberg_marquardt(problem: &Problem, model: &dyn Model, start: Vec<f64>) -> Solution {
    let n = start.len();
    let mut p = start;
    let mut chi2 = problem.chi2(model, &p);
    let initial = chi2;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (a, b) = problem.normal_equations(model, &p);
        let scale = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * a[(i, i)].max(1e-12 * scale);
            }
            let Some(step) = damped.lu().solve(&b) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(v, d)| v + d).collect();
            let trial_chi2 = problem.chi2(model, &trial);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let norm_p = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let norm_step = step.norm();
                p = trial;
                let improvement = chi2 - trial_chi2;
                chi2 = trial_chi2;
                lambda = (lambda * 0.1).max(1e-15);
                accepted = true;
                if norm_step <= STEP_TOL * (norm_p + STEP_TOL)
                    || improvement <= 1e-15 * chi2.max(1e-300)
                {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill direction left at machine precision
            converged = chi2 <= initial;
            break;
        }
        if converged {
            break;
        }
    }
    let (a, _) = problem.normal_equations(model, &p);
    let cov = a.try_inverse();
    Solution {
        params: p,
        cov,
        chi2,
        converged,
        iterations,
    }
}

fn finish(
    problem: &Problem,
    model_tag: FitModel,
    names: &[&str],
    sol: Solution,
    mut flags: Vec<String>,
) -> FitResult {
    let dof = (problem.x.len() - sol.params.len()).max(1) as f64;
    let reduced = sol.chi2 / dof;
    let stderr = match &sol.cov {
        Some(c) => (0..sol.params.len())
            .map(|i| (c[(i, i)].max(0.0) * reduced).sqrt())
            .collect(),
        None => {
            flags.push("singular_covariance".into());
            vec![f64::NAN; sol.params.len()]
        }
    };
    if !sol.converged {
        flags.push("not_converged".into());
    }
    FitResult {
        model: model_tag,
        names: names.iter().map(|s| s.to_string()).collect(),
        params: sol.params,
        stderr,
        residual_norm: sol.chi2.sqrt(),
        converged: sol.converged,
        iterations: sol.iterations,
        flags,
    }
}

/// Best decay rate on a logarithmic grid, with the linear parameters
/// eliminated by least squares.
fn scan_rate(problem: &Problem, eval: impl Fn(f64) -> Option<f64>) -> f64 {
    let span = problem.span().max(1e-300);
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=80 {
        let rate = if k == 0 { 0.0 } else { 10f64.powf(-2.0 + 4.0 * (k - 1) as f64 / 79.0) / span };
        if let Some(c) = eval(rate) {
            if c < best.0 {
                best = (c, rate);
            }
        }
    }
    best.1
}

/// Fits `off + A exp(-x / tau) sin(2 pi f x + phi)`.
///
/// Parameters are reported as `offset`, `amplitude`, `frequency` (inverse x
/// units), `phase`, `rate` (1/tau) and `decay` (tau). A negative fitted
/// amplitude is folded into the phase.
pub fn fit_damped_sine(x: &[f64], y: &[f64], stderr: Option<&[f64]>) -> Result<FitResult> {
    let problem = Problem::new(x, y, stderr)?;
    let span = problem.span();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let detrended: Vec<f64> = y.iter().map(|v| v - mean).collect();

    // periodogram peak between one cycle per span and the mean-spacing Nyquist
    let dx = span / (x.len() - 1) as f64;
    let (f_lo, f_hi) = (0.5 / span, 0.5 / dx);
    let mut peak = (0.0, f_lo);
    let samples = 4000;
    for k in 0..=samples {
        let f = f_lo + (f_hi - f_lo) * k as f64 / samples as f64;
        let w = 2.0 * std::f64::consts::PI * f;
        let (mut s, mut c) = (0.0, 0.0);
        for (xi, yi) in x.iter().zip(&detrended) {
            s += yi * (w * xi).sin();
            c += yi * (w * xi).cos();
        }
        let power = s * s + c * c;
        if power > peak.0 {
            peak = (power, f);
        }
    }
    let f0 = peak.1;
    let w0 = 2.0 * std::f64::consts::PI * f0;
    let solve_at = |rate: f64| {
        let one = |_: f64| 1.0;
        let s = move |t: f64| (-rate * t).exp() * (w0 * t).sin();
        let c = move |t: f64| (-rate * t).exp() * (w0 * t).cos();
        problem.linear(&[&one, &s, &c])
    };
    let rate0 = scan_rate(&problem, |r| solve_at(r).map(|v| v.1));
    let (coef, _) = solve_at(rate0).unwrap_or((vec![mean, 0.0, 0.0], 0.0));
    let amp0 = coef[1].hypot(coef[2]);
    let phase0 = coef[2].atan2(coef[1]);
    let start = vec![coef[0], amp0, f0, phase0, rate0];
    let mut sol = levenberg_marquardt(&problem, &Sine, start);

    let p = &mut sol.params;
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[3] += std::f64::consts::PI;
    }
    if p[2] < 0.0 {
        p[2] = -p[2];
        p[3] = std::f64::consts::PI - p[3];
    }
    p[3] = p[3].rem_euclid(2.0 * std::f64::consts::PI);

    let mut flags = Vec::new();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if sol.params[1] <= 1e-8 * scale {
        flags.push("frequency_unidentifiable".into());
    } else if span * sol.params[2] < 1.5 {
        flags.push("short_span".into());
    }
    let mut res = finish(
        &problem,
        FitModel::DampedSine,
        &["offset", "amplitude", "frequency", "phase", "rate"],
        sol,
        flags,
    );
    push_decay(&mut res, 4);
    Ok(res)
}

/// Fits `off + A exp(-x / tau)`; reported as `offset`, `amplitude`, `rate`
/// and `decay`. A vanishing rate or amplitude yields `decay = inf` with the
/// `no_decay` flag.
pub fn fit_exponential(x: &[f64], y: &[f64], stderr: Option<&[f64]>) -> Result<FitResult> {
    let problem = Problem::new(x, y, stderr)?;
    let solve_at = |rate: f64| {
        let one = |_: f64| 1.0;
        let e = move |t: f64| (-rate * t).exp();
        if rate == 0.0 {
            return problem.linear(&[&one]).map(|(c, chi)| (vec![c[0], 0.0], chi));
        }
        problem.linear(&[&one, &e])
    };
    let rate0 = scan_rate(&problem, |r| solve_at(r).map(|v| v.1));
    let mut flags = Vec::new();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let res = if rate0 == 0.0 {
        let (coef, chi2) = solve_at(0.0).unwrap_or((vec![0.0, 0.0], 0.0));
        flags.push("no_decay".into());
        let sol = Solution {
            params: vec![coef[0], 0.0, 0.0],
            cov: None,
            chi2,
            converged: true,
            iterations: 0,
        };
        let mut r = finish(&problem, FitModel::Exponential, &["offset", "amplitude", "rate"], sol, flags);
        r.flags.retain(|f| f != "singular_covariance");
        let sem = (chi2 / (x.len() - 1) as f64 / x.len() as f64).sqrt();
        r.stderr = vec![sem, 0.0, 0.0];
        r
    } else {
        let (coef, _) = solve_at(rate0).unwrap_or((vec![0.0, 0.0], 0.0));
        let sol = levenberg_marquardt(&problem, &Exponential, vec![coef[0], coef[1], rate0]);
        if sol.params[2] <= 0.0 || sol.params[1].abs() <= 1e-8 * scale {
            flags.push("no_decay".into());
        }
        finish(&problem, FitModel::Exponential, &["offset", "amplitude", "rate"], sol, flags)
    };
    let mut res = res;
    push_decay(&mut res, 2);
    Ok(res)
}

fn push_decay(res: &mut FitResult, rate_index: usize) {
    let (rate, err) = (res.params[rate_index], res.stderr[rate_index]);
    let no_decay = res.flagged("no_decay") || rate <= 0.0;
    let (tau, tau_err) = if no_decay {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (1.0 / rate, err / (rate * rate))
    };
    if no_decay && !res.flagged("no_decay") {
        res.flags.push("no_decay".into());
    }
    res.names.push("decay".into());
    res.params.push(tau);
    res.stderr.push(tau_err);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sine(x: f64, off: f64, a: f64, f: f64, phi: f64, tau: f64) -> f64 {
        off + a * (-x / tau).exp() * (2.0 * std::f64::consts::PI * f * x + phi).sin()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn damped_sine_noiseless_round_trip() {
        // A = 0.94, 29 MHz, tau = 500 ns sampled every 2 ns for 600 ns
        let x: Vec<f64> = (0..300).map(|k| 2.0 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| sine(t, 0.5, 0.47, 0.029, -1.3, 500.0)).collect();
        let fit = fit_damped_sine(&x, &y, None).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!(rel(2.0 * fit.value("amplitude"), 0.94) < 1e-3);
        assert!(rel(fit.value("frequency"), 0.029) < 1e-3);
        assert!(rel(fit.value("decay"), 500.0) < 1e-3);
        assert!(rel(fit.value("offset"), 0.5) < 1e-3);
        let phase = fit.value("phase");
        let expected = (-1.3f64).rem_euclid(2.0 * std::f64::consts::PI);
        assert!((phase - expected).abs() < 1e-3);
    }

    #[test]
    fn flat_data_is_flagged() {
        let x: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let y = vec![0.3; 50];
        let fit = fit_damped_sine(&x, &y, None).unwrap();
        assert!(fit.converged);
        assert!(fit.value("amplitude").abs() < 1e-8);
        assert!((fit.value("offset") - 0.3).abs() < 1e-12);
        assert!(fit.flagged("frequency_unidentifiable"));
    }

    #[test]
    fn rejects_short_input() {
        let x = [0.0, 1.0, 2.0];
        assert!(fit_damped_sine(&x, &x, None).is_err());
        assert!(fit_exponential(&x, &x, None).is_err());
        let x: Vec<f64> = (0..20).map(|k| k as f64).collect();
        assert!(fit_exponential(&x, &x[..19], None).is_err());
    }

    #[test]
    fn damped_sine_noisy_within_three_sigma() {
        let x: Vec<f64> = (0..200).map(|k| 2.5 * k as f64).collect();
        let truth = [0.5, 0.45, 0.029, 0.7, 1.0 / 500.0];
        let mut inside = 0;
        let trials = 200;
        for trial in 0..trials {
            let mut rng = crate::readout::shot_rng(11, 0, trial);
            let y: Vec<f64> = x
                .iter()
                .map(|&t| {
                    sine(t, truth[0], truth[1], truth[2], truth[3], 1.0 / truth[4])
                        + 0.01 * rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            let s = vec![0.01; x.len()];
            let fit = fit_damped_sine(&x, &y, Some(&s)).unwrap();
            let ok = ["offset", "amplitude", "frequency", "phase", "rate"]
                .iter()
                .zip(truth)
                .all(|(n, t)| (fit.value(n) - t).abs() <= 3.0 * fit.error(n));
            inside += ok as usize;
        }
        // five parameters jointly; each marginal is inside 99.7% of the time
        assert!(inside as f64 >= 0.95 * trials as f64, "{inside}");
    }

    #[test]
    fn exponential_round_trip() {
        let x: Vec<f64> = (0..100).map(|k| 20.0 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| 0.1 + 0.8 * (-t / 450.0).exp()).collect();
        let fit = fit_exponential(&x, &y, None).unwrap();
        assert!(fit.converged);
        assert!(rel(fit.value("decay"), 450.0) < 1e-3);
        assert!(rel(fit.value("amplitude"), 0.8) < 1e-3);
        assert!(rel(fit.value("offset"), 0.1) < 1e-3);
    }

    #[test]
    fn exponential_noisy_within_three_sigma() {
        let x: Vec<f64> = (0..60).map(|k| 25.0 * k as f64).collect();
        let mut inside = 0;
        for trial in 0..200 {
            let mut rng = crate::readout::shot_rng(12, 0, trial);
            let y: Vec<f64> = x
                .iter()
                .map(|&t| 0.1 + 0.8 * (-t / 450.0).exp() + 0.01 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let fit = fit_exponential(&x, &y, None).unwrap();
            let ok = (fit.value("rate") - 1.0 / 450.0).abs() <= 3.0 * fit.error("rate")
                && (fit.value("offset") - 0.1).abs() <= 3.0 * fit.error("offset")
                && (fit.value("amplitude") - 0.8).abs() <= 3.0 * fit.error("amplitude");
            inside += ok as usize;
        }
        assert!(inside >= 190, "{inside}");
    }

    #[test]
    fn constant_data_has_infinite_decay() {
        let x: Vec<f64> = (0..30).map(|k| 10.0 * k as f64).collect();
        let y = vec![0.7; 30];
        let fit = fit_exponential(&x, &y, None).unwrap();
        assert!(fit.flagged("no_decay"));
        assert_eq!(fit.value("decay"), f64::INFINITY);
        assert!((fit.value("offset") - 0.7).abs() < 1e-12);
    }
}
