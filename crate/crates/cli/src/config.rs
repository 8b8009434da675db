//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Every key must be known and may appear once. Disturbance windows use
//! indexed keys `scenario.disturbance.<n>.{start,end,force}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use dobkit::sim::{DisturbanceWindow, NoiseSpec, Reference, Scenario};
use dobkit::{DobConfig, MeasurementKind, OuterGains, PlantParams};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    Step,
    Sine,
    Hold,
}

impl ReferenceKind {
    fn as_str(&self) -> &'static str {
        match self {
            ReferenceKind::Step => "step",
            ReferenceKind::Sine => "sine",
            ReferenceKind::Hold => "hold",
        }
    }
}

/// Parsed configuration. Optional keys stay `None` so that serialization
/// reproduces exactly what was given.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub j_m: Option<f64>,
    pub k_t: Option<f64>,
    pub j_mn: Option<f64>,
    pub k_tn: Option<f64>,
    pub kind: Option<MeasurementKind>,
    pub g_dob: Option<f64>,
    pub g_v: Option<f64>,
    pub ts: Option<f64>,
    pub kp: Option<f64>,
    pub kd: Option<f64>,
    pub duration: Option<f64>,
    pub reference_kind: Option<ReferenceKind>,
    pub reference_amplitude: Option<f64>,
    pub reference_freq: Option<f64>,
    /// Indexed windows; each entry is (start, end, force).
    pub disturbance: BTreeMap<u32, [Option<f64>; 3]>,
    pub noise_position: Option<f64>,
    pub noise_velocity: Option<f64>,
    pub noise_acceleration: Option<f64>,
    pub seed: Option<u64>,
}

const FLOAT_KEYS: [&str; 15] = [
    "plant.J_m",
    "plant.K_t",
    "plant.J_mn",
    "plant.K_tn",
    "dob.g_dob",
    "dob.g_v",
    "dob.Ts",
    "outer.Kp",
    "outer.Kd",
    "scenario.duration",
    "scenario.reference.amplitude",
    "scenario.reference.freq",
    "scenario.noise.position",
    "scenario.noise.velocity",
    "scenario.noise.acceleration",
];

impl ConfigFile {
    fn float_slot(&mut self, key: &str) -> Option<&mut Option<f64>> {
        Some(match key {
            "plant.J_m" => &mut self.j_m,
            "plant.K_t" => &mut self.k_t,
            "plant.J_mn" => &mut self.j_mn,
            "plant.K_tn" => &mut self.k_tn,
            "dob.g_dob" => &mut self.g_dob,
            "dob.g_v" => &mut self.g_v,
            "dob.Ts" => &mut self.ts,
            "outer.Kp" => &mut self.kp,
            "outer.Kd" => &mut self.kd,
            "scenario.duration" => &mut self.duration,
            "scenario.reference.amplitude" => &mut self.reference_amplitude,
            "scenario.reference.freq" => &mut self.reference_freq,
            "scenario.noise.position" => &mut self.noise_position,
            "scenario.noise.velocity" => &mut self.noise_velocity,
            "scenario.noise.acceleration" => &mut self.noise_acceleration,
            _ => return None,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ConfigFile::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| ConfigError::Line { line, msg };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{body}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("missing value for '{key}'")));
            }
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(err(format!("duplicate key '{key}' (first set on line {first})")));
            }
            cfg.assign(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    fn assign(&mut self, key: &str, value: &str) -> Result<(), String> {
        let float = |v: &str| -> Result<f64, String> {
            let x: f64 = v.parse().map_err(|_| format!("'{key}' expects a number, got '{v}'"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("'{key}' must be finite, got '{v}'"))
            }
        };
        if let Some(slot) = self.float_slot(key) {
            *slot = Some(float(value)?);
            return Ok(());
        }
        match key {
            "dob.kind" => {
                self.kind = Some(value.parse::<MeasurementKind>().map_err(|e| e.to_string())?);
            }
            "scenario.reference.kind" => {
                self.reference_kind = Some(match value.to_ascii_lowercase().as_str() {
                    "step" => ReferenceKind::Step,
                    "sine" => ReferenceKind::Sine,
                    "hold" => ReferenceKind::Hold,
                    other => return Err(format!("unknown reference kind '{other}' (expected step, sine or hold)")),
                });
            }
            "scenario.seed" => {
                self.seed = Some(value.parse().map_err(|_| format!("'{key}' expects an unsigned integer, got '{value}'"))?);
            }
            _ => {
                let rest = key
                    .strip_prefix("scenario.disturbance.")
                    .ok_or_else(|| format!("unknown key '{key}'"))?;
                let (idx, field) = rest
                    .split_once('.')
                    .ok_or_else(|| format!("unknown key '{key}'"))?;
                let idx: u32 = idx.parse().map_err(|_| format!("unknown key '{key}'"))?;
                let slot = match field {
                    "start" => 0,
                    "end" => 1,
                    "force" => 2,
                    _ => return Err(format!("unknown key '{key}'")),
                };
                self.disturbance.entry(idx).or_default()[slot] = Some(float(value)?);
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back `self`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut this = self.clone();
        for key in FLOAT_KEYS {
            if let Some(v) = *this.float_slot(key).expect("known key") {
                let _ = writeln!(out, "{key} = {v:?}");
            }
        }
        if let Some(k) = self.kind {
            let _ = writeln!(out, "dob.kind = {k}");
        }
        if let Some(k) = self.reference_kind {
            let _ = writeln!(out, "scenario.reference.kind = {}", k.as_str());
        }
        for (idx, w) in &self.disturbance {
            for (field, v) in ["start", "end", "force"].iter().zip(w) {
                if let Some(v) = v {
                    let _ = writeln!(out, "scenario.disturbance.{idx}.{field} = {v:?}");
                }
            }
        }
        if let Some(s) = self.seed {
            let _ = writeln!(out, "scenario.seed = {s}");
        }
        out
    }

    fn required(v: Option<f64>, key: &str) -> Result<f64, ConfigError> {
        v.ok_or_else(|| invalid(format!("missing required key '{key}'")))
    }

    pub fn plant(&self) -> Result<PlantParams, ConfigError> {
        let j_m = Self::required(self.j_m, "plant.J_m")?;
        let k_t = Self::required(self.k_t, "plant.K_t")?;
        PlantParams::new(j_m, k_t, self.j_mn.unwrap_or(j_m), self.k_tn.unwrap_or(k_t))
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn dob(&self) -> Result<DobConfig, ConfigError> {
        let kind = self.kind.ok_or_else(|| invalid("missing required key 'dob.kind'"))?;
        if kind == MeasurementKind::Position && self.g_v.is_none() {
            return Err(invalid("dob.kind = position requires 'dob.g_v'"));
        }
        DobConfig::new(
            kind,
            self.plant()?,
            Self::required(self.g_dob, "dob.g_dob")?,
            self.g_v,
            Self::required(self.ts, "dob.Ts")?,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    /// `None` when neither gain is given (outer loop open).
    pub fn gains(&self) -> Result<Option<OuterGains>, ConfigError> {
        match (self.kp, self.kd) {
            (None, None) => Ok(None),
            (Some(kp), Some(kd)) => OuterGains::new(kp, kd).map(Some).map_err(|e| invalid(e.to_string())),
            _ => Err(invalid("'outer.Kp' and 'outer.Kd' must be given together")),
        }
    }

    pub fn require_gains(&self) -> Result<OuterGains, ConfigError> {
        self.gains()?
            .ok_or_else(|| invalid("this command needs the outer loop: set 'outer.Kp' and 'outer.Kd'"))
    }

    fn reference(&self) -> Result<Reference, ConfigError> {
        let amplitude = || Self::required(self.reference_amplitude, "scenario.reference.amplitude");
        Ok(match self.reference_kind.unwrap_or(ReferenceKind::Hold) {
            ReferenceKind::Hold => Reference::HoldZero,
            ReferenceKind::Step => Reference::Step { amplitude: amplitude()? },
            ReferenceKind::Sine => Reference::Sinusoid {
                amplitude: amplitude()?,
                freq: Self::required(self.reference_freq, "scenario.reference.freq")?,
            },
        })
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let mut disturbance = Vec::new();
        for (idx, w) in &self.disturbance {
            match w {
                [Some(start), Some(end), Some(force)] => {
                    disturbance.push(DisturbanceWindow { start: *start, end: *end, force: *force })
                }
                _ => {
                    return Err(invalid(format!(
                        "disturbance {idx} needs start, end and force"
                    )))
                }
            }
        }
        let sc = Scenario {
            duration: Self::required(self.duration, "scenario.duration")?,
            cfg: self.dob()?,
            gains: self.gains()?,
            reference: self.reference()?,
            disturbance,
            noise: NoiseSpec {
                position: self.noise_position.unwrap_or(0.0),
                velocity: self.noise_velocity.unwrap_or(0.0),
                acceleration: self.noise_acceleration.unwrap_or(0.0),
                seed: self.seed.unwrap_or(0),
            },
        };
        sc.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(sc)
    }
}
