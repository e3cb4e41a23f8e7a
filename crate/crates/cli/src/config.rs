use std::path::Path;
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use roqam::emulation::{Budget, Repair};
use roqam::greens::Axis;
use roqam::{Error, Result};

/// Fully resolved settings of one run. Unset optional fields fall back to
/// per-command defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub u: f64,
    pub n_bath: usize,
    pub bandwidth: f64,
    /// Impurity mode whose Green's function is estimated.
    pub p: usize,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub r_max: usize,
    pub depths: Vec<usize>,
    pub delta1: f64,
    pub deltas: Vec<f64>,
    pub budget: String,
    /// `"auto"` or a positive number.
    pub dt: String,
    pub dt_points: usize,
    pub seed: u64,
    pub seeds: usize,
    pub repair: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub target: f64,
    pub n_bath_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            u: 5.0,
            n_bath: 1,
            bandwidth: 4.0,
            p: 0,
            gamma: 0.4,
            axis: None,
            omega_min: None,
            omega_max: None,
            points: None,
            r: None,
            r_max: 6,
            depths: vec![1, 2, 3],
            delta1: 0.0,
            deltas: vec![1e-3, 1e-5, 1e-7],
            budget: "EB3".into(),
            dt: "auto".into(),
            dt_points: 30,
            seed: 0,
            seeds: 20,
            repair: "unitary".into(),
            beta: None,
            target: 0.01,
            n_bath_max: 3,
            out: None,
            format: "csv".into(),
        }
    }
}

/// Output encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn field_error<T>(field: &str, msg: impl std::fmt::Display) -> Result<T> {
    Err(Error::Validation(format!("{field}: {msg}")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(file: Option<&Path>, flags: &Overrides, globals: &GlobalOverrides) -> Result<Self> {
        let mut table = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            // reject unknown keys before merging
            Self::from_toml(&text)?;
            let parsed: toml::Table = text.parse().map_err(|e| Error::Parse(format!("config file: {e}")))?;
            table.extend(parsed);
        }
        for layer in [toml::Table::try_from(flags), toml::Table::try_from(globals)] {
            table.extend(layer.map_err(|e| Error::Parse(e.to_string()))?);
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return field_error("u", "must be finite and nonnegative");
        }
        if self.n_bath < 1 {
            return field_error("n_bath", "must be at least 1");
        }
        if !(self.bandwidth > 0.0) {
            return field_error("bandwidth", "must be positive");
        }
        if self.p >= 2 + 2 * self.n_bath {
            return field_error("p", format!("mode {} out of range for n_bath = {}", self.p, self.n_bath));
        }
        let axis = self.axis_or(Axis::Real)?;
        if axis == Axis::Real && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return field_error("gamma", "must be positive on the real axis");
        }
        if self.points == Some(0) {
            return field_error("points", "must be at least 1");
        }
        if let (Some(lo), Some(hi)) = (self.omega_min, self.omega_max) {
            if !(hi >= lo) {
                return field_error("omega_max", "must not be below omega_min");
            }
        }
        if self.r == Some(0) {
            return field_error("r", "must be at least 1");
        }
        if self.r_max < 1 {
            return field_error("r_max", "must be at least 1");
        }
        if self.depths.is_empty() || self.depths.contains(&0) {
            return field_error("depths", "must be a nonempty list of positive depths");
        }
        if !(self.delta1 >= 0.0 && self.delta1.is_finite()) {
            return field_error("delta1", "must be finite and nonnegative");
        }
        if self.deltas.iter().any(|d| !(*d > 0.0)) {
            return field_error("deltas", "entries must be positive");
        }
        self.budget()?;
        self.dt()?;
        self.repair()?;
        self.format()?;
        if self.dt_points < 1 {
            return field_error("dt_points", "must be at least 1");
        }
        if self.seeds < 1 {
            return field_error("seeds", "must be at least 1");
        }
        if let Some(b) = self.beta {
            if !(b >= 0.0 && b.is_finite()) {
                return field_error("beta", "must be finite and nonnegative");
            }
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return field_error("target", "must lie in (0, 1)");
        }
        if self.n_bath_max < 1 {
            return field_error("n_bath_max", "must be at least 1");
        }
        Ok(())
    }

    pub fn axis_or(&self, default: Axis) -> Result<Axis> {
        match &self.axis {
            None => Ok(default),
            Some(s) => Axis::from_str(s).or_else(|e| field_error("axis", e)),
        }
    }

    pub fn budget(&self) -> Result<Budget> {
        Budget::from_str(&self.budget).or_else(|e| field_error("budget", e))
    }

    pub fn repair(&self) -> Result<Repair> {
        Repair::from_str(&self.repair).or_else(|e| field_error("repair", e))
    }

    /// `None` for `"auto"`.
    pub fn dt(&self) -> Result<Option<f64>> {
        if self.dt == "auto" {
            return Ok(None);
        }
        match self.dt.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Some(v)),
            _ => field_error("dt", format!("expected \"auto\" or a positive number, got {:?}", self.dt)),
        }
    }

    pub fn format(&self) -> Result<Format> {
        match self.format.as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => field_error("format", format!("expected csv or json, got {other:?}")),
        }
    }
}

/// Model and run settings accepted by every subcommand.
#[derive(Args, Clone, Debug, Default, Serialize)]
pub struct Overrides {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bath: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// real or imaginary.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Krylov depth.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    /// Comma-separated depths.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    /// Comma-separated first-moment noise levels.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// EB1, EB2 or EB3.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<String>,
    /// Time step or "auto".
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_points: Option<usize>,
    /// Number of noise seeds for medians.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    /// none, unitary or hermitian.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repair: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Relative error target for resource estimates.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bath_max: Option<usize>,
}

/// Flags shared by all commands that also live in the config.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GlobalOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}
