// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation of a transmon read out by a Josephson bifurcation amplifier.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod device;
pub mod error;
pub mod io;
pub mod jba;
pub mod protocols;
pub mod readout;

pub use error::{Error, Result};
