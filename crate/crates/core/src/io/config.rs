// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::jba::EscapeModel;
use crate::readout::pulse::{DEFAULT_DT_NS, DEFAULT_HOLD_OFFSET_DB};
use crate::readout::{Preparation, RabiDrive, ReadoutPulse};

/// Largest grid a config may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

/// A grid written either as an explicit list or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// Expanded grid values. Ranges include `stop` when it lies on the
    /// step lattice.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => {
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize + 1;
                (0..n).map(|k| r.start + k as f64 * r.step).collect()
            }
        }
    }

    fn check(&self, pointer: &str) -> Result<()> {
        let bad = |message: &str| Error::Config {
            pointer: pointer.to_string(),
            message: message.to_string(),
        };
        match self {
            Grid::List(v) => {
                if v.is_empty() {
                    return Err(bad("grid must not be empty"));
                }
                if v.len() > MAX_GRID_POINTS {
                    return Err(bad("grid too large"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(bad("grid values must be finite"));
                }
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(bad("grid must be sorted ascending"));
                }
            }
            Grid::Range(r) => {
                if ![r.start, r.stop, r.step].iter().all(|x| x.is_finite()) {
                    return Err(bad("range bounds must be finite"));
                }
                if !(r.step > 0.0) {
                    return Err(bad("step must be > 0"));
                }
                if r.stop < r.start {
                    return Err(bad("stop must be >= start"));
                }
                if (r.stop - r.start) / r.step >= MAX_GRID_POINTS as f64 {
                    return Err(bad("grid too large"));
                }
            }
        }
        Ok(())
    }
}

/// Readout drive: frequency in GHz, powers in dB at the refrigerator
/// input, times in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpec {
    pub f_drive: f64,
    /// Sampling power. When absent the power maximizing the expected
    /// 0/1 contrast is used.
    #[serde(rename = "power_dB", default, skip_serializing_if = "Option::is_none")]
    pub power_db: Option<f64>,
    #[serde(rename = "hold_offset_dB", default = "default_hold_offset")]
    pub hold_offset_db: f64,
    pub t_rise: f64,
    pub t_sample: f64,
    pub t_hold: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_hold_offset() -> f64 {
    DEFAULT_HOLD_OFFSET_DB
}

fn default_dt() -> f64 {
    DEFAULT_DT_NS
}

fn default_true() -> bool {
    true
}

impl ReadoutSpec {
    /// Pulse at sampling power `p_sample`.
    pub fn pulse(&self, p_sample: f64) -> Result<ReadoutPulse> {
        let pulse = ReadoutPulse {
            f_drive: self.f_drive,
            p_sample,
            p_hold: p_sample + self.hold_offset_db,
            t_rise: self.t_rise,
            t_sample: self.t_sample,
            t_hold: self.t_hold,
            dt: self.dt,
        };
        pulse.validate()?;
        Ok(pulse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScurveSpec {
    /// Qubit-cavity detuning f_C - f01 (GHz).
    pub delta: f64,
    pub readout: ReadoutSpec,
    pub power_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSpec {
    pub delta: f64,
    pub readout: ReadoutSpec,
    /// Rabi pulse lengths (ns).
    pub dt_grid: Grid,
    #[serde(default = "default_true")]
    pub shelve: bool,
    #[serde(default)]
    pub drive: RabiDrive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseySpec {
    pub delta: f64,
    pub readout: ReadoutSpec,
    /// Free-evolution delays (ns).
    pub delay_grid: Grid,
    /// Drive detuning from the qubit (MHz).
    #[serde(rename = "detuning_MHz")]
    pub detuning_mhz: f64,
    #[serde(default = "default_true")]
    pub shelve: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct T1Spec {
    pub delta: f64,
    pub readout: ReadoutSpec,
    pub delay_grid: Grid,
    #[serde(default)]
    pub shelve: bool,
    /// Auxiliary drive powers during the delay (dB). One T1 per power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_power_grid: Option<Grid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoReadoutSpec {
    pub delta: f64,
    /// Shared by both readouts.
    pub readout: ReadoutSpec,
    pub dt_grid: Grid,
    /// Gap between the end of the first readout and the second (ns).
    pub delay: f64,
    /// When false only the second readout is applied.
    #[serde(default = "default_true")]
    pub first_readout: bool,
    #[serde(default)]
    pub drive: RabiDrive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcStarkSpec {
    pub delta: f64,
    /// Auxiliary tone (GHz).
    pub f_drive: f64,
    pub power_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub delta_grid: Grid,
    /// Timing and frequency; the power is optimized per point.
    pub readout: ReadoutSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotTraceSpec {
    pub delta: f64,
    pub readout: ReadoutSpec,
    /// Prepared states, cycled over the shots.
    #[serde(default = "default_states")]
    pub states: Vec<u8>,
    /// Detection low-pass corner (MHz).
    #[serde(rename = "lpf_MHz", default = "default_lpf")]
    pub lpf_mhz: f64,
    /// Record sample period (ns).
    #[serde(default = "default_sample_period")]
    pub sample_period: f64,
}

fn default_states() -> Vec<u8> {
    vec![0, 1]
}

fn default_lpf() -> f64 {
    20.0
}

fn default_sample_period() -> f64 {
    1.0
}

/// The experiment to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Scurve(ScurveSpec),
    Rabi(RabiSpec),
    Ramsey(RamseySpec),
    T1(T1Spec),
    TwoReadout(TwoReadoutSpec),
    AcStark(AcStarkSpec),
    SweepDetuning(SweepSpec),
    ShotTrace(ShotTraceSpec),
}

impl Experiment {
    pub const KINDS: [&'static str; 8] = [
        "scurve",
        "rabi",
        "ramsey",
        "t1",
        "two_readout",
        "ac_stark",
        "sweep_detuning",
        "shot_trace",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Scurve(_) => "scurve",
            Experiment::Rabi(_) => "rabi",
            Experiment::Ramsey(_) => "ramsey",
            Experiment::T1(_) => "t1",
            Experiment::TwoReadout(_) => "two_readout",
            Experiment::AcStark(_) => "ac_stark",
            Experiment::SweepDetuning(_) => "sweep_detuning",
            Experiment::ShotTrace(_) => "shot_trace",
        }
    }

    /// One-line description for `list-experiments`.
    pub fn describe(kind: &str) -> &'static str {
        match kind {
            "scurve" => "switching probability vs sampling power for |0>, |1> and shelved |1>",
            "rabi" => "Rabi oscillation read out with the composite readout",
            "ramsey" => "Ramsey fringes and T2",
            "t1" => "energy relaxation, optionally under an auxiliary drive",
            "two_readout" => "back-action test with two successive readouts",
            "ac_stark" => "photon number from the Stark shift across the threshold",
            "sweep_detuning" => "contrast and coherence vs qubit-cavity detuning",
            "shot_trace" => "single-shot homodyne records",
            _ => "",
        }
    }
}

/// How switching probabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    MonteCarlo,
    Expected,
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceParams,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Shots per point.
    pub shots: u64,
    #[serde(default)]
    pub method: Method,
    /// Escape model override; the calibrated model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape: Option<EscapeModel>,
    #[serde(default)]
    pub prep: Preparation,
    pub experiment: Experiment,
}

fn at(pointer: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::InvalidParameter { field, reason } => Error::Config {
            pointer: format!("{pointer}/{field}"),
            message: reason,
        },
        other => Error::Config {
            pointer: pointer.to_string(),
            message: other.to_string(),
        },
    }
}

fn require(ok: bool, pointer: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config {
            pointer: pointer.to_string(),
            message: message.to_string(),
        })
    }
}

fn check_readout(r: &ReadoutSpec, pointer: &str) -> Result<()> {
    require(r.f_drive > 0.0 && r.f_drive.is_finite(), &format!("{pointer}/f_drive"), "must be > 0 GHz")?;
    require(
        r.hold_offset_db.is_finite() && r.hold_offset_db <= 0.0,
        &format!("{pointer}/hold_offset_dB"),
        "must be <= 0",
    )?;
    if let Some(p) = r.power_db {
        require(p.is_finite(), &format!("{pointer}/power_dB"), "must be finite")?;
    }
    r.pulse(r.power_db.unwrap_or(0.0)).map(|_| ()).map_err(|e| match e {
        Error::InvalidParameter { field, reason } => {
            let key = match field.as_str() {
                "t_R" => "t_rise",
                "t_S" => "t_sample",
                "t_H" => "t_hold",
                other => other,
            };
            Error::Config {
                pointer: format!("{pointer}/{key}"),
                message: reason,
            }
        }
        other => at(pointer)(other),
    })
}

fn check_delta(delta: f64) -> Result<()> {
    require(delta > 0.0 && delta.is_finite(), "/experiment/delta", "must be > 0 GHz")
}

fn no_power(r: &ReadoutSpec) -> Result<()> {
    require(
        r.power_db.is_none(),
        "/experiment/readout/power_dB",
        "not used by this experiment; powers come from the grid or the optimizer",
    )
}

impl RunConfig {
    /// Checks every invariant not enforced by the schema. Errors carry the
    /// JSON pointer of the offending value.
    pub fn validate(&self) -> Result<()> {
        self.device.validate().map_err(at("/device"))?;
        self.prep.validate().map_err(at("/prep"))?;
        if let Some(e) = &self.escape {
            EscapeModel::new(e.attempt_rate, e.barrier_scale).map_err(at("/escape"))?;
            require(e.exponent > 0.0 && e.exponent.is_finite(), "/escape/exponent", "must be > 0")?;
        }
        let min = crate::readout::mc::MIN_SHOTS;
        match &self.experiment {
            Experiment::ShotTrace(_) => require(self.shots >= 1, "/shots", "must be >= 1")?,
            Experiment::AcStark(_) => {}
            Experiment::TwoReadout(_) | Experiment::SweepDetuning(_) => {
                require(self.shots >= min, "/shots", &format!("must be >= {min}"))?
            }
            _ if self.method == Method::MonteCarlo => {
                require(self.shots >= min, "/shots", &format!("must be >= {min}"))?
            }
            _ => {}
        }
        let ro = "/experiment/readout";
        match &self.experiment {
            Experiment::Scurve(s) => {
                check_delta(s.delta)?;
                check_readout(&s.readout, ro)?;
                no_power(&s.readout)?;
                s.power_grid.check("/experiment/power_grid")?;
            }
            Experiment::Rabi(s) => {
                check_delta(s.delta)?;
                check_readout(&s.readout, ro)?;
                s.dt_grid.check("/experiment/dt_grid")?;
                require(s.dt_grid.values()[0] >= 0.0, "/experiment/dt_grid", "must be >= 0")?;
                s.drive.validate().map_err(at("/experiment/drive"))?;
            }
            Experiment::Ramsey(s) => {
                check_delta(s.delta)?;
                check_readout(&s.readout, ro)?;
                s.delay_grid.check("/experiment/delay_grid")?;
                require(s.delay_grid.values()[0] >= 0.0, "/experiment/delay_grid", "must be >= 0")?;
                require(
                    s.detuning_mhz != 0.0 && s.detuning_mhz.is_finite(),
                    "/experiment/detuning_MHz",
                    "must be finite and non-zero",
                )?;
            }
            Experiment::T1(s) => {
                check_delta(s.delta)?;
                check_readout(&s.readout, ro)?;
                s.delay_grid.check("/experiment/delay_grid")?;
                require(s.delay_grid.values()[0] >= 0.0, "/experiment/delay_grid", "must be >= 0")?;
                if let Some(g) = &s.drive_power_grid {
                    g.check("/experiment/drive_power_grid")?;
                }
            }
            Experiment::TwoReadout(s) => {
                check_delta(s.delta)?;
                check_readout(&s.readout, ro)?;
                s.dt_grid.check("/experiment/dt_grid")?;
                require(s.delay >= 0.0 && s.delay.is_finite(), "/experiment/delay", "must be >= 0")?;
                s.drive.validate().map_err(at("/experiment/drive"))?;
            }
            Experiment::AcStark(s) => {
                check_delta(s.delta)?;
                require(s.f_drive > 0.0 && s.f_drive.is_finite(), "/experiment/f_drive", "must be > 0 GHz")?;
                s.power_grid.check("/experiment/power_grid")?;
            }
            Experiment::SweepDetuning(s) => {
                check_readout(&s.readout, ro)?;
                no_power(&s.readout)?;
                require(
                    s.readout.hold_offset_db == DEFAULT_HOLD_OFFSET_DB && s.readout.dt == DEFAULT_DT_NS,
                    "/experiment/readout",
                    "the sweep uses the default hold offset and step",
                )?;
                s.delta_grid.check("/experiment/delta_grid")?;
                require(s.delta_grid.values()[0] > 0.0, "/experiment/delta_grid", "must be > 0")?;
            }
            Experiment::ShotTrace(s) => {
                check_delta(s.delta)?;
                check_readout(&s.readout, ro)?;
                require(!s.states.is_empty(), "/experiment/states", "must not be empty")?;
                require(s.states.iter().all(|&v| v <= 2), "/experiment/states", "states are 0, 1 or 2")?;
                require(s.lpf_mhz > 0.0 && s.lpf_mhz.is_finite(), "/experiment/lpf_MHz", "must be > 0")?;
                require(
                    s.sample_period > 0.0 && s.sample_period.is_finite(),
                    "/experiment/sample_period",
                    "must be > 0",
                )?;
            }
        }
        Ok(())
    }

    /// The config without its output location, as echoed into metadata.
    pub fn canonical(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        v
    }

    /// SHA-256 of the canonical config. Independent of `output_dir`.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.canonical()).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

fn probe<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Option<(String, String)> {
    serde_path_to_error::deserialize::<_, T>(v)
        .err()
        .map(|e| (pointer_of(e.path()), e.inner().to_string()))
}

/// Tagged unions are buffered before dispatch, which hides the path of an
/// error inside the variant. Re-parse the variant alone to recover it.
fn locate_in_experiment(text: &str) -> Option<(String, String)> {
    let doc: serde_json::Value = serde_json::from_str(text).ok()?;
    let mut body = doc.get("experiment")?.as_object()?.clone();
    let kind = body.remove("kind")?.as_str()?.to_string();
    let v = serde_json::Value::Object(body);
    let (inner, message) = match kind.as_str() {
        "scurve" => probe::<ScurveSpec>(v),
        "rabi" => probe::<RabiSpec>(v),
        "ramsey" => probe::<RamseySpec>(v),
        "t1" => probe::<T1Spec>(v),
        "two_readout" => probe::<TwoReadoutSpec>(v),
        "ac_stark" => probe::<AcStarkSpec>(v),
        "sweep_detuning" => probe::<SweepSpec>(v),
        "shot_trace" => probe::<ShotTraceSpec>(v),
        _ => None,
    }?;
    Some((format!("/experiment{inner}"), message))
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        let message = e.inner().to_string();
        match (pointer.as_str(), locate_in_experiment(text)) {
            ("/experiment", Some((pointer, message))) => Error::Config { pointer, message },
            _ => Error::Config { pointer, message },
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates the config at `path`.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> String {
        r#"{
            "device": {"f_C": 6.4535, "Q0": 685, "g": 0.044, "E_J_max": 21, "E_c": 1.2,
                       "T1_int": 0.7, "A_flux": 2e-5, "T_N": 3, "atten_dB": -77},
            "seed": 42,
            "output_dir": "out",
            "shots": 1000,
            "experiment": {
                "kind": "scurve",
                "delta": 0.38,
                "readout": {"f_drive": 6.4365, "t_rise": 15, "t_sample": 250, "t_hold": 700},
                "power_grid": {"start": -42, "stop": -36, "step": 0.5}
            }
        }"#
        .to_string()
    }

    fn err_pointer(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { pointer, .. }) => pointer,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn default_device_block_parses() {
        let cfg = parse_config(&sample()).unwrap();
        assert_eq!(cfg.device, DeviceParams::default());
        assert_eq!(cfg.experiment.kind(), "scurve");
        let Experiment::Scurve(s) = &cfg.experiment else { unreachable!() };
        assert_eq!(s.power_grid.values().len(), 13);
        assert_eq!(s.readout.dt, 0.5);
    }

    #[test]
    fn missing_seed_rejected() {
        let text = sample().replace("\"seed\": 42,", "");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn negative_q0_names_field() {
        let text = sample().replace("\"Q0\": 685", "\"Q0\": -685");
        assert_eq!(err_pointer(&text), "/device/Q0");
    }

    #[test]
    fn unknown_keys_rejected_everywhere() {
        for (from, to) in [
            ("\"seed\": 42,", "\"seed\": 42, \"sed\": 1,"),
            ("\"Q0\": 685", "\"Q0\": 685, \"Q1\": 3"),
            ("\"t_rise\": 15", "\"t_rise\": 15, \"t_fall\": 3"),
            ("\"step\": 0.5", "\"step\": 0.5, \"n\": 4"),
            ("\"delta\": 0.38", "\"delta\": 0.38, \"detla\": 0.38"),
        ] {
            let text = sample().replace(from, to);
            assert!(parse_config(&text).is_err(), "accepted {to}");
        }
    }

    #[test]
    fn pointers_locate_errors() {
        assert_eq!(
            err_pointer(&sample().replace("\"t_sample\": 250", "\"t_sample\": \"x\"")),
            "/experiment/readout/t_sample"
        );
        assert_eq!(
            err_pointer(&sample().replace("\"step\": 0.5", "\"step\": -0.5")),
            "/experiment/power_grid"
        );
        assert_eq!(
            err_pointer(&sample().replace("\"t_hold\": 700", "\"t_hold\": -1")),
            "/experiment/readout/t_hold"
        );
        assert_eq!(err_pointer(&sample().replace("\"shots\": 1000", "\"shots\": 5")), "/shots");
    }

    #[test]
    fn empty_grid_rejected() {
        let text = sample().replace("{\"start\": -42, \"stop\": -36, \"step\": 0.5}", "[]");
        assert_eq!(err_pointer(&text), "/experiment/power_grid");
    }

    #[test]
    fn unknown_kind_rejected() {
        let text = sample().replace("\"kind\": \"scurve\"", "\"kind\": \"spectroscopy\"");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = parse_config(&sample()).unwrap();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn range_includes_stop() {
        let g = Grid::Range(RangeSpec {
            start: 0.0,
            stop: 1.0,
            step: 0.1,
        });
        let v = g.values();
        assert_eq!(v.len(), 11);
        assert!((v[10] - 1.0).abs() < 1e-12);
    }
}
