// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fit::FitResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub protocol: String,
    pub seed: u64,
    pub device_hash: String,
    pub version: String,
    /// Protocol inputs needed to rerun the experiment.
    pub inputs: serde_json::Value,
}

impl Metadata {
    pub fn new(protocol: &str, seed: u64, device_hash: String, inputs: serde_json::Value) -> Self {
        Self {
            protocol: protocol.to_string(),
            seed,
            device_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub x_label: String,
    pub x_grid: Vec<f64>,
    pub series: Vec<Series>,
    pub fits: BTreeMap<String, FitResult>,
    pub scalars: BTreeMap<String, Estimate>,
    /// Per-point failures that did not stop the run.
    pub notes: Vec<String>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    pub fn new(x_label: &str, x_grid: Vec<f64>, metadata: Metadata) -> Self {
        Self {
            x_label: x_label.to_string(),
            x_grid,
            series: Vec::new(),
            fits: BTreeMap::new(),
            scalars: BTreeMap::new(),
            notes: Vec::new(),
            metadata,
        }
    }

    pub fn push_series(&mut self, name: &str, values: Vec<f64>, stderr: Vec<f64>) -> Result<()> {
        if values.len() != self.x_grid.len() || stderr.len() != self.x_grid.len() {
            return Err(Error::GridMismatch(format!(
                "series {name} has {} values for {} grid points",
                values.len(),
                self.x_grid.len()
            )));
        }
        self.series.push(Series {
            name: name.to_string(),
            values,
            stderr,
        });
        Ok(())
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn scalar(&self, name: &str) -> Option<Estimate> {
        self.scalars.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64, stderr: f64) {
        self.scalars.insert(name.to_string(), Estimate { value, stderr });
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty() || self.series.is_empty()
    }
}
