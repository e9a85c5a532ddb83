use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, C64};
use crate::petz::ChannelFamily;

/// Labelled single-qubit pure input state.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedState {
    pub label: String,
    pub amplitudes: [C64; 2],
}

impl NamedState {
    pub fn new(label: impl Into<String>, alpha: C64, beta: C64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            label: label.into(),
            amplitudes: [alpha, beta],
        })
    }

    /// Rescales (α, β) to unit norm.
    pub fn normalized(label: impl Into<String>, alpha: C64, beta: C64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(label, alpha / norm, beta / norm)
    }

    /// Built-in states: `0`, `1`, `+`, `-` and `psi` = 0.9268|0⟩ + 0.3754i|1⟩
    /// (renormalized).
    pub fn builtin(name: &str) -> Option<Self> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (label, a, b) = match name {
            "0" => ("|0>", C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            "1" => ("|1>", C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
            "+" => ("|+>", C64::new(r, 0.0), C64::new(r, 0.0)),
            "-" => ("|->", C64::new(r, 0.0), C64::new(-r, 0.0)),
            "psi" => ("psi", C64::new(0.9268, 0.0), C64::new(0.0, 0.3754)),
            _ => return None,
        };
        Self::normalized(label, a, b).ok()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.amplitudes).expect("amplitudes are normalized")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Kraus,
    Dqc,
    Pulses,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Kraus => "kraus",
            Backend::Dqc => "dqc",
            Backend::Pulses => "pulses",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kraus" => Ok(Backend::Kraus),
            "dqc" => Ok(Backend::Dqc),
            "pulses" => Ok(Backend::Pulses),
            other => Err(Error::Config(format!("unknown backend `{other}` (expected kraus, dqc or pulses)"))),
        }
    }
}

/// Everything a fidelity sweep needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub channel: ChannelFamily,
    pub p_grid: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub input_states: Vec<NamedState>,
    pub backend: Backend,
    /// Polarization of the pseudo-pure input, pulses backend only.
    pub kappa: f64,
}

pub const DEFAULT_EPSILONS: [f64; 3] = [0.2, 0.5, 0.8];

/// 0.00, 0.05, …, 1.00.
pub fn default_p_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

impl SweepConfig {
    /// Default input states for each channel.
    pub fn default_for(channel: ChannelFamily) -> Self {
        let names: &[&str] = match channel {
            ChannelFamily::Ad => &["0", "1", "+", "psi"],
            ChannelFamily::Pd => &["+", "-", "0", "psi"],
        };
        Self {
            channel,
            p_grid: default_p_grid(),
            epsilons: DEFAULT_EPSILONS.to_vec(),
            input_states: names.iter().map(|n| NamedState::builtin(n).expect("builtin")).collect(),
            backend: Backend::Kraus,
            kappa: 1.0,
        }
    }

    /// Checks ranges and sorts both grids ascending.
    pub fn validate(mut self) -> Result<Self> {
        if self.p_grid.is_empty() {
            return Err(Error::Config("p_grid is empty".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilons is empty".into()));
        }
        if self.input_states.is_empty() {
            return Err(Error::Config("no input states".into()));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("p = {p} is outside [0, 1]")));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Config(format!("epsilon = {e} is outside (0, 1)")));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Config(format!("kappa = {} is outside (0, 1]", self.kappa)));
        }
        self.p_grid.sort_by(f64::total_cmp);
        self.p_grid.dedup();
        self.epsilons.sort_by(f64::total_cmp);
        self.epsilons.dedup();
        Ok(self)
    }

    /// Parses flat `key = value` text on top of the channel defaults.
    ///
    /// Keys: `channel`, `backend`, `p_grid`, `epsilons`, `states`, `kappa`,
    /// and `state.<name> = re0, im0, re1, im1` to define extra states.
    /// Lists are comma separated; grids also accept `start:stop:step`.
    pub fn parse(text: &str, channel: Option<ChannelFamily>) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        let file_channel = entries
            .iter()
            .find(|(k, _)| k == "channel")
            .map(|(_, v)| ChannelFamily::parse(v))
            .transpose()?;
        let family = channel.or(file_channel).unwrap_or(ChannelFamily::Ad);
        let mut cfg = Self::default_for(family);
        let mut custom = Vec::new();
        let mut state_names = None;
        for (k, v) in &entries {
            match k.as_str() {
                "channel" => {}
                "backend" => cfg.backend = v.parse()?,
                "p_grid" => cfg.p_grid = parse_grid(v)?,
                "epsilons" => cfg.epsilons = parse_grid(v)?,
                "kappa" => cfg.kappa = parse_number(v)?,
                "states" => state_names = Some(parse_list(v)),
                _ if k.starts_with("state.") => {
                    let name = &k["state.".len()..];
                    let nums = parse_list(v).iter().map(|s| parse_number(s)).collect::<Result<Vec<_>>>()?;
                    let [a, b, c, d] = nums[..] else {
                        return Err(Error::Config(format!("{k}: expected four numbers re0, im0, re1, im1")));
                    };
                    custom.push(NamedState::normalized(name, C64::new(a, b), C64::new(c, d))?);
                }
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        if let Some(names) = state_names {
            cfg.input_states = names
                .iter()
                .map(|n| {
                    custom
                        .iter()
                        .find(|s| &s.label == n)
                        .cloned()
                        .or_else(|| NamedState::builtin(n))
                        .ok_or_else(|| Error::Config(format!("unknown state `{n}`")))
                })
                .collect::<Result<_>>()?;
        } else if !custom.is_empty() {
            cfg.input_states.extend(custom);
        }
        cfg.validate()
    }

    pub fn from_file(path: &Path, channel: Option<ChannelFamily>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, channel)
    }
}

fn parse_number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

/// Comma list or inclusive `start:stop:step` range.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [single] => parse_list(single).iter().map(|x| parse_number(x)).collect(),
        [start, stop, step] => {
            let (a, b, h) = (parse_number(start)?, parse_number(stop)?, parse_number(step)?);
            if h <= 0.0 || b < a {
                return Err(Error::Config(format!("bad range `{s}`")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            // round away accumulated binary noise so grid values print cleanly
            Ok((0..=n).map(|k| ((a + k as f64 * h) * 1e12).round() / 1e12).collect())
        }
        _ => Err(Error::Config(format!("bad grid `{s}`"))),
    }
}
