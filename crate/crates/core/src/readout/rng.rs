// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Counter-based random streams. Every shot owns a generator derived from
//! (master seed, point index, shot index) so results never depend on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the substream for grid point `point`.
pub fn point_seed(master: u64, point: u64) -> u64 {
    splitmix64(master ^ splitmix64(point))
}

/// Generator for one shot.
pub fn shot_rng(master: u64, point: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed(master, point));
    rng.set_stream(shot);
    rng
}

/// Identifies the stream a shot was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ShotSeed {
    pub master: u64,
    pub point: u64,
    pub shot: u64,
}

impl ShotSeed {
    pub fn rng(&self) -> ChaCha8Rng {
        shot_rng(self.master, self.point, self.shot)
    }
}
