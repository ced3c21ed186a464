//! Line-oriented `key = value` configuration.
//!
//! ```text
//! # EH-AWGN at SNR 1
//! channel = awgn
//! noise_var = 1.0
//! energy = exponential
//! mean_energy = 1.0
//! epsilon = 0.1
//! ```
//!
//! A DMC matrix is a bracketed list of rows and may span several lines:
//!
//! ```text
//! channel = dmc
//! channel_matrix = [[0.89, 0.11],
//!                   [0.11, 0.89]]
//! costs = [0, 1]
//! ```

use std::fmt;

use ehfb_core::awgn_bounds::{Lambda, Mode};
use ehfb_core::ehmodel::{AwgnSpec, ChannelSpec, DmcSpec, EnergyProcess};

/// One problem found in a configuration. Line 0 means the problem is not tied
/// to a line (a missing key).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    Dmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKindName {
    Constant,
    Uniform,
    Exponential,
    Bernoulli,
    TruncatedGaussian,
}

impl EnergyKindName {
    const ALL: [(&'static str, EnergyKindName); 5] = [
        ("constant", EnergyKindName::Constant),
        ("uniform", EnergyKindName::Uniform),
        ("exponential", EnergyKindName::Exponential),
        ("bernoulli", EnergyKindName::Bernoulli),
        ("truncated_gaussian", EnergyKindName::TruncatedGaussian),
    ];

    fn as_str(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).map(|(s, _)| *s).unwrap()
    }
}

/// Parsed and range-checked parameters. Every field is optional here;
/// commands state which ones they need.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub channel: Option<ChannelKind>,
    pub noise_var: Option<f64>,
    pub energy: Option<EnergyKindName>,
    pub mean_energy: Option<f64>,
    pub energy_low: Option<f64>,
    pub energy_high: Option<f64>,
    pub energy_p: Option<f64>,
    pub energy_level: Option<f64>,
    pub energy_mu: Option<f64>,
    pub energy_sd: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda: Option<Lambda>,
    pub mode: Option<Mode>,
    pub berry_esseen_constant: Option<f64>,
    pub channel_matrix: Option<Vec<Vec<f64>>>,
    pub costs: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub n: Option<u64>,
    pub messages: Option<u64>,
    pub k_eps: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

/// Every key the parser accepts, in serialization order.
pub const KEYS: [&str; 22] = [
    "channel",
    "noise_var",
    "energy",
    "mean_energy",
    "energy_low",
    "energy_high",
    "energy_p",
    "energy_level",
    "energy_mu",
    "energy_sd",
    "epsilon",
    "lambda",
    "mode",
    "berry_esseen_constant",
    "channel_matrix",
    "costs",
    "eta",
    "n",
    "messages",
    "k_eps",
    "trials",
    "seed",
];

fn parse_f64(key: &str, raw: &str) -> Result<f64, String> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{key}: expected a finite number, got '{raw}'")),
    }
}

fn parse_u64(key: &str, raw: &str) -> Result<u64, String> {
    raw.parse::<u64>()
        .map_err(|_| format!("{key}: expected a nonnegative integer, got '{raw}'"))
}

fn positive(key: &str, raw: &str) -> Result<f64, String> {
    let v = parse_f64(key, raw)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{key} must be > 0"))
    }
}

fn nonnegative(key: &str, raw: &str) -> Result<f64, String> {
    let v = parse_f64(key, raw)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{key} must be >= 0"))
    }
}

fn open_unit(key: &str, raw: &str) -> Result<f64, String> {
    let v = parse_f64(key, raw)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{key} must lie in (0,1)"))
    }
}

fn at_least_one(key: &str, raw: &str) -> Result<u64, String> {
    let v = parse_u64(key, raw)?;
    if v >= 1 {
        Ok(v)
    } else {
        Err(format!("{key} must be >= 1"))
    }
}

fn parse_vector(key: &str, raw: &str) -> Result<Vec<f64>, String> {
    let inner = raw
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("{key}: expected a bracketed list, got '{raw}'"))?;
    if inner.trim().is_empty() {
        return Err(format!("{key}: list is empty"));
    }
    inner.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn parse_matrix(key: &str, raw: &str) -> Result<Vec<Vec<f64>>, String> {
    let compact: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = compact
        .strip_prefix("[[")
        .and_then(|s| s.strip_suffix("]]"))
        .ok_or_else(|| format!("{key}: expected [[row], [row], ...], got '{raw}'"))?;
    inner
        .split("],[")
        .map(|row| parse_vector(key, &format!("[{row}]")))
        .collect()
}

impl Params {
    /// Sets one key from its textual value, checking type and range.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), String> {
        match key {
            "channel" => {
                self.channel = Some(match raw {
                    "awgn" => ChannelKind::Awgn,
                    "dmc" => ChannelKind::Dmc,
                    _ => return Err(format!("channel: expected 'awgn' or 'dmc', got '{raw}'")),
                })
            }
            "noise_var" => self.noise_var = Some(positive(key, raw)?),
            "energy" => {
                self.energy = Some(
                    EnergyKindName::ALL
                        .iter()
                        .find(|(s, _)| *s == raw)
                        .map(|(_, k)| *k)
                        .ok_or_else(|| {
                            format!(
                                "energy: expected one of constant, uniform, exponential, bernoulli, truncated_gaussian, got '{raw}'"
                            )
                        })?,
                )
            }
            "mean_energy" => self.mean_energy = Some(positive(key, raw)?),
            "energy_low" => self.energy_low = Some(nonnegative(key, raw)?),
            "energy_high" => self.energy_high = Some(positive(key, raw)?),
            "energy_p" => {
                let p = parse_f64(key, raw)?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err("energy_p must lie in (0,1]".into());
                }
                self.energy_p = Some(p)
            }
            "energy_level" => self.energy_level = Some(positive(key, raw)?),
            "energy_mu" => self.energy_mu = Some(parse_f64(key, raw)?),
            "energy_sd" => self.energy_sd = Some(positive(key, raw)?),
            "epsilon" => self.epsilon = Some(open_unit(key, raw)?),
            "lambda" => {
                self.lambda = Some(if raw == "auto" {
                    Lambda::Auto
                } else {
                    Lambda::Fixed(open_unit(key, raw).map_err(|e| format!("{e} or be 'auto'"))?)
                })
            }
            "mode" => {
                self.mode = Some(match raw {
                    "explicit" => Mode::Explicit,
                    "asymptotic" => Mode::Asymptotic,
                    _ => return Err(format!("mode: expected 'explicit' or 'asymptotic', got '{raw}'")),
                })
            }
            "berry_esseen_constant" => {
                let c = parse_f64(key, raw)?;
                if !(c > 0.0 && c <= 0.5) {
                    return Err("berry_esseen_constant must lie in (0, 0.5]".into());
                }
                self.berry_esseen_constant = Some(c)
            }
            "channel_matrix" => self.channel_matrix = Some(parse_matrix(key, raw)?),
            "costs" => {
                let c = parse_vector(key, raw)?;
                if c.iter().any(|&v| v < 0.0) {
                    return Err("costs must be >= 0".into());
                }
                self.costs = Some(c)
            }
            "eta" => self.eta = Some(positive(key, raw)?),
            "n" => self.n = Some(at_least_one(key, raw)?),
            "messages" => self.messages = Some(at_least_one(key, raw)?),
            "k_eps" => self.k_eps = Some(positive(key, raw)?),
            "trials" => self.trials = Some(at_least_one(key, raw)?),
            "seed" => self.seed = Some(parse_u64(key, raw)?),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    fn value_text(&self, key: &str) -> Option<String> {
        fn list(v: &[f64]) -> String {
            let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", items.join(", "))
        }
        match key {
            "channel" => self.channel.map(|c| match c {
                ChannelKind::Awgn => "awgn".to_string(),
                ChannelKind::Dmc => "dmc".to_string(),
            }),
            "noise_var" => self.noise_var.map(|v| v.to_string()),
            "energy" => self.energy.map(|e| e.as_str().to_string()),
            "mean_energy" => self.mean_energy.map(|v| v.to_string()),
            "energy_low" => self.energy_low.map(|v| v.to_string()),
            "energy_high" => self.energy_high.map(|v| v.to_string()),
            "energy_p" => self.energy_p.map(|v| v.to_string()),
            "energy_level" => self.energy_level.map(|v| v.to_string()),
            "energy_mu" => self.energy_mu.map(|v| v.to_string()),
            "energy_sd" => self.energy_sd.map(|v| v.to_string()),
            "epsilon" => self.epsilon.map(|v| v.to_string()),
            "lambda" => self.lambda.map(|l| match l {
                Lambda::Auto => "auto".to_string(),
                Lambda::Fixed(v) => v.to_string(),
            }),
            "mode" => self.mode.map(|m| m.as_str().to_string()),
            "berry_esseen_constant" => self.berry_esseen_constant.map(|v| v.to_string()),
            "channel_matrix" => self.channel_matrix.as_ref().map(|m| {
                let rows: Vec<String> = m.iter().map(|r| list(r)).collect();
                format!("[{}]", rows.join(", "))
            }),
            "costs" => self.costs.as_ref().map(|c| list(c)),
            "eta" => self.eta.map(|v| v.to_string()),
            "n" => self.n.map(|v| v.to_string()),
            "messages" => self.messages.map(|v| v.to_string()),
            "k_eps" => self.k_eps.map(|v| v.to_string()),
            "trials" => self.trials.map(|v| v.to_string()),
            "seed" => self.seed.map(|v| v.to_string()),
            _ => None,
        }
    }

    /// Text that [`parse_config`] turns back into an equal value.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .filter_map(|k| self.value_text(k).map(|v| format!("{k} = {v}\n")))
            .collect()
    }

    /// The energy-arrival law, if the keys it needs are present.
    pub fn energy_process(&self) -> Result<EnergyProcess, String> {
        let kind = self.energy.unwrap_or(EnergyKindName::Constant);
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| format!("missing key '{key}' for energy = {}", kind.as_str()));
        let built = match kind {
            EnergyKindName::Constant => EnergyProcess::constant(need(self.mean_energy, "mean_energy")?),
            EnergyKindName::Exponential => EnergyProcess::exponential(1.0 / need(self.mean_energy, "mean_energy")?),
            EnergyKindName::Uniform => EnergyProcess::uniform(need(self.energy_low, "energy_low")?, need(self.energy_high, "energy_high")?),
            EnergyKindName::Bernoulli => EnergyProcess::scaled_bernoulli(need(self.energy_p, "energy_p")?, need(self.energy_level, "energy_level")?),
            EnergyKindName::TruncatedGaussian => {
                EnergyProcess::truncated_gaussian(need(self.energy_mu, "energy_mu")?, need(self.energy_sd, "energy_sd")?)
            }
        };
        built.map_err(|e| e.to_string())
    }

    /// The channel named by `channel` (AWGN when absent).
    pub fn channel_spec(&self) -> Result<ChannelSpec, String> {
        match self.channel.unwrap_or(ChannelKind::Awgn) {
            ChannelKind::Awgn => {
                let nv = self.noise_var.ok_or("missing key 'noise_var' for channel = awgn")?;
                AwgnSpec::new(nv).map(ChannelSpec::Awgn).map_err(|e| e.to_string())
            }
            ChannelKind::Dmc => {
                let w = self.channel_matrix.clone().ok_or("missing key 'channel_matrix' for channel = dmc")?;
                let costs = self.costs.clone().ok_or("missing key 'costs' for channel = dmc")?;
                DmcSpec::new(w, costs).map(ChannelSpec::Dmc).map_err(|e| e.to_string())
            }
        }
    }
}

// Splits the text into logical `(line, key, value)` entries, joining lines
// while brackets are open.
fn logical_entries(text: &str, errors: &mut Vec<ConfigError>) -> Vec<(usize, String, String)> {
    let mut out = Vec::new();
    let mut open: Option<(usize, String, String)> = None;
    for (i, raw_line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if let Some((start, key, mut value)) = open.take() {
            value.push(' ');
            value.push_str(line);
            if depth(&value) > 0 {
                open = Some((start, key, value));
            } else {
                out.push((start, key, value));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(ConfigError { line: lineno, message: format!("expected 'key = value', got '{line}'") });
            continue;
        };
        let (key, value) = (k.trim().to_string(), v.trim().to_string());
        if key.is_empty() {
            errors.push(ConfigError { line: lineno, message: "empty key".into() });
        } else if depth(&value) > 0 {
            open = Some((lineno, key, value));
        } else {
            out.push((lineno, key, value));
        }
    }
    if let Some((start, key, _)) = open {
        errors.push(ConfigError { line: start, message: format!("{key}: unclosed '['") });
    }
    out
}

fn depth(s: &str) -> i64 {
    s.chars().map(|c| match c {
        '[' => 1,
        ']' => -1,
        _ => 0,
    }).sum()
}

/// Parses a configuration, collecting every error rather than stopping at the
/// first.
pub fn parse_config(text: &str) -> Result<Params, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut params = Params::default();
    let mut seen: Vec<(String, usize)> = Vec::new();
    for (line, key, value) in logical_entries(text, &mut errors) {
        if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
            errors.push(ConfigError { line, message: format!("duplicate key '{key}' (first set on line {first})") });
            continue;
        }
        seen.push((key.clone(), line));
        if let Err(message) = params.set(&key, &value) {
            errors.push(ConfigError { line, message });
        }
    }
    let line_of = |keys: &[&str]| {
        seen.iter().filter(|(k, _)| keys.contains(&k.as_str())).map(|(_, l)| *l).max().unwrap_or(0)
    };
    // cross-key constraints, checked only when the parts parsed cleanly
    if errors.is_empty() {
        let energy_keys = ["energy", "mean_energy", "energy_low", "energy_high", "energy_p", "energy_level", "energy_mu", "energy_sd"];
        if seen.iter().any(|(k, _)| energy_keys.contains(&k.as_str()) && k != "energy") {
            if let Err(message) = params.energy_process() {
                errors.push(ConfigError { line: line_of(&energy_keys), message });
            }
        }
        if params.channel_matrix.is_some() || params.costs.is_some() {
            let mut dmc = params.clone();
            dmc.channel = Some(ChannelKind::Dmc);
            if let Err(message) = dmc.channel_spec() {
                errors.push(ConfigError { line: line_of(&["channel_matrix", "costs"]), message });
            }
        }
    }
    if errors.is_empty() {
        Ok(params)
    } else {
        errors.sort_by_key(|e| e.line);
        Err(errors)
    }
}
