// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(clippy::needless_range_loop)]

use std::sync::OnceLock;

use jba_readout::device::{CoherenceBudget, DeviceParams};
use jba_readout::jba::{s_curve_analytic, spinodals, EscapeModel};
use jba_readout::protocols::Setup;
use jba_readout::readout::{
    median_switching_time, run_scurve_mc, scurve_expected, switching_times, ReadoutModel,
    ReadoutPulse, ShotSeed, ShotSimulator,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup() -> &'static Setup {
    static SETUP: OnceLock<Setup> = OnceLock::new();
    SETUP.get_or_init(|| Setup::new(&DeviceParams::default(), 0.38).unwrap())
}

fn default_pulse(s: &Setup, power: f64) -> ReadoutPulse {
    ReadoutPulse::new(s.readout_frequency(17.0), power, 15.0, 250.0, 700.0).unwrap()
}

proptest! {
    #![proptest_config(Config {
        cases: 256,
        rng_seed: RngSeed::Fixed(0x7368_6f74),
        failure_persistence: None,
        ..Config::default()
    })]

    #[test]
    fn shot_records_are_causal_and_reproducible(
        master in any::<u64>(),
        shot in any::<u64>(),
        prepared in 0u8..3,
        power in -42.0f64..-36.0,
    ) {
        let s = setup();
        let pulse = default_pulse(s, power);
        let sim = ShotSimulator::new(&s.model(pulse.f_drive).unwrap(), &pulse).unwrap();
        let seed = ShotSeed { master, point: 3, shot };
        let a = sim.record(prepared, seed);
        prop_assert_eq!(&a, &sim.record(prepared, seed));
        // decays only, in time order, ending in the final state
        let mut state = prepared;
        let mut t = 0.0;
        for j in &a.jumps {
            prop_assert_eq!(j.from, state);
            prop_assert!(j.to < j.from);
            prop_assert!(j.t >= t && j.t <= pulse.duration());
            state = j.to;
            t = j.t;
        }
        prop_assert_eq!(state, a.final_state);
        // latching: one switching time, inside the decision window
        prop_assert_eq!(a.bifurcated, a.bifurcation_time.is_some());
        if let Some(tb) = a.bifurcation_time {
            prop_assert!(tb >= 0.0 && tb <= pulse.decision_time() + 1e-9);
        }
    }
}

#[test]
fn monte_carlo_matches_closed_form_without_decay() {
    let device = DeviceParams::default();
    let mut draw = ChaCha8Rng::seed_from_u64(20);
    let shots = 4000;
    for case in 0..20u64 {
        let offset = draw.random_range(14.0..32.0);
        let t_s = draw.random_range(20.0..300.0);
        let state = draw.random_range(0..3usize);
        let s = setup();
        let f = s.readout_frequency(offset);
        let model = ReadoutModel::new(
            &device,
            &s.map,
            f,
            EscapeModel::calibrated(device.kappa()),
            CoherenceBudget::frozen(),
        )
        .unwrap();
        let point = model.points[state];
        let Ok(sp) = spinodals(&point) else { continue };
        let power = model.power_reference();
        let centre = power.power_db(sp.eps2_up);
        let grid: Vec<f64> = (0..5).map(|k| centre - 1.5 + 0.4 * k as f64).collect();
        let pulse = ReadoutPulse::new(f, centre, 0.0, t_s, 50.0).unwrap();
        let mut pop = [0.0; 3];
        pop[state] = 1.0;
        let mc = run_scurve_mc(&model, &pulse, &pop, &grid, shots, 77, 100 * case, "mc").unwrap();
        let exact = s_curve_analytic(&point, &model.escape, &grid, t_s, &power).unwrap();
        for k in 0..grid.len() {
            let p = exact.p_b[k];
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            // continuity correction of half a count
            let gap = (mc.p_b[k] - p).abs() - 0.5 / shots as f64;
            assert!(
                gap <= 3.0 * sigma,
                "case {case} state {state} P = {:.2}: mc {} vs {p} (sigma {sigma})",
                grid[k],
                mc.p_b[k]
            );
        }
    }
}

#[test]
fn monte_carlo_matches_population_engine_with_decay() {
    let s = setup();
    let pulse = default_pulse(s, -40.0);
    let model = s.model(pulse.f_drive).unwrap();
    let grid: Vec<f64> = (0..9).map(|k| -41.0 + 0.5 * k as f64).collect();
    let shots = 4000;
    for pop in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.3, 0.5, 0.2]] {
        let mc = run_scurve_mc(&model, &pulse, &pop, &grid, shots, 5, 0, "mc").unwrap();
        let ex = scurve_expected(&model, &pulse, &pop, &grid, "ex").unwrap();
        for k in 0..grid.len() {
            let p = ex.p_b[k];
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!((mc.p_b[k] - p).abs() - 0.5 / shots as f64 <= 3.0 * sigma, "{pop:?} {k}");
        }
    }
}

#[test]
fn identical_across_thread_counts() {
    let s = setup();
    let pulse = default_pulse(s, -39.0);
    let model = s.model(pulse.f_drive).unwrap();
    let grid = [-40.0, -39.5, -39.0, -38.5];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let c = run_scurve_mc(&model, &pulse, &[0.2, 0.7, 0.1], &grid, 3000, 9, 0, "x").unwrap();
                let t = switching_times(&model, &pulse, &[0.0, 1.0, 0.0], 3000, 9, 11).unwrap();
                (c, t)
            })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn effective_measurement_time() {
    let s = setup();
    let f = s.readout_frequency(17.0);
    let model = s.model(f).unwrap();
    let power = model.power_reference();
    // state-1 hazard high, state 0 still quiet: just above the state-1 threshold
    let p1 = power.power_db(model.thresholds()[1].unwrap()) + 0.6;
    let pulse = default_pulse(s, p1);
    let ideal = [0.0, 1.0, 0.0];
    let frozen = ReadoutModel {
        cascade: CoherenceBudget::frozen(),
        ..model.clone()
    };
    let undecayed = scurve_expected(&frozen, &pulse, &ideal, &[p1], "f").unwrap().p_b[0];
    assert!(undecayed >= 0.95, "{undecayed}");
    let times = switching_times(&model, &pulse, &ideal, 20_000, 3, 0).unwrap();
    let t_m = median_switching_time(&times).unwrap();
    assert!(t_m <= 60.0, "median switching time {t_m} ns");
    let p_b1 = times.iter().filter(|t| t.is_some()).count() as f64 / times.len() as f64;
    let loss = undecayed - p_b1;
    let predicted = 1.0 - (-t_m / (s.budget.t1 * 1e3)).exp();
    assert!(
        (loss - predicted).abs() <= 0.03,
        "loss {loss:.4} vs 1 - exp(-t_M/T1) = {predicted:.4}"
    );
}
