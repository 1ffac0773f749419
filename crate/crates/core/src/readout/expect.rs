// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic propagation of the qubit populations that have not yet
//! switched the resonator. Gives the exact ensemble average of the shot
//! sampler up to the O(dt^2) splitting of decay and hazard.

use super::hazard::HazardTable;
use super::prep::{decay, Populations};
use crate::device::CoherenceBudget;

/// Switching probability and the unswitched populations at the end of the
/// decision window.
pub fn propagate(
    pop: Populations,
    table: &HazardTable,
    cascade: &CoherenceBudget,
) -> (f64, Populations) {
    let total: f64 = pop.iter().sum();
    let mut u = pop;
    let increments: [Vec<f64>; 3] = [0, 1, 2].map(|s| table.increments(s).collect());
    for k in 0..table.steps() {
        let half = 0.5 * (table.node_time(k + 1) - table.node_time(k));
        u = decay(u, cascade, half);
        for s in 0..3 {
            u[s] *= (-increments[s][k]).exp();
        }
        u = decay(u, cascade, half);
    }
    (total - u.iter().sum::<f64>(), u)
}

/// Ensemble switching probability for initial populations `pop`.
pub fn switching_probability(pop: Populations, table: &HazardTable, cascade: &CoherenceBudget) -> f64 {
    propagate(pop, table, cascade).0.clamp(0.0, 1.0)
}
