use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::assignment::DEFAULT_ORACLE_CAP;
use crate::error::{Error, Result};
use crate::multicell::{DesiredSignal, MulticellParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    SingleCell,
    MultiCell,
    MultiCellNoFfr,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::SingleCell => "single-cell",
            ScenarioKind::MultiCell => "multi-cell",
            ScenarioKind::MultiCellNoFfr => "multi-cell-no-ffr",
        }
    }

    pub fn is_multicell(self) -> bool {
        !matches!(self, ScenarioKind::SingleCell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaKind {
    Proposed,
    Shen,
    Static,
    Exhaustive,
}

impl SaKind {
    pub fn label(self) -> &'static str {
        match self {
            SaKind::Proposed => "proposed",
            SaKind::Shen => "shen",
            SaKind::Static => "static",
            SaKind::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaKind {
    Proposed,
    Uniform,
    Exact,
}

impl PaKind {
    pub fn label(self) -> &'static str {
        match self {
            PaKind::Proposed => "proposed",
            PaKind::Uniform => "uniform",
            PaKind::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemePair {
    pub sa: SaKind,
    pub pa: PaKind,
}

impl fmt::Display for SchemePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.sa.label(), self.pa.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DesiredSignalKind {
    #[default]
    Unattenuated,
    PathLoss,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MulticellConfig {
    pub cell_radius_km: f64,
    pub intercell_distance_km: f64,
    /// `tau / R`.
    pub centre_radius_ratio: f64,
    pub frf: usize,
    pub target_ber: f64,
    pub tx_power_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub taps: usize,
    pub desired_signal: DesiredSignalKind,
}

impl Default for MulticellConfig {
    fn default() -> Self {
        let p = MulticellParams::default();
        Self {
            cell_radius_km: p.cell_radius_km,
            intercell_distance_km: p.intercell_distance_km,
            centre_radius_ratio: p.centre_radius_km / p.cell_radius_km,
            frf: p.frf,
            target_ber: p.target_ber,
            tx_power_dbm: p.tx_power_dbm,
            noise_density_dbm_hz: p.noise_density_dbm_hz,
            subcarrier_spacing_hz: p.subcarrier_spacing_hz,
            taps: p.taps,
            desired_signal: DesiredSignalKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Largest `K^M` the exhaustive SA may enumerate.
    pub max_candidates: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_candidates: DEFAULT_ORACLE_CAP,
        }
    }
}

fn default_total_power() -> f64 {
    1.0
}

/// One experiment: a scenario, a sweep, and a matrix of schemes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub subcarriers: usize,
    pub chunk_sizes: Vec<usize>,
    pub users: usize,
    /// Per-user tap counts (single-cell).
    #[serde(default)]
    pub taps: Vec<usize>,
    /// Requested-rate weights `gamma_k`; all ones when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Edge-group weights `beta_k` (multi-cell); all ones when absent.
    #[serde(default)]
    pub edge_weights: Option<Vec<f64>>,
    #[serde(default = "default_total_power")]
    pub total_power: f64,
    /// Average per-subcarrier SNR points, dB (single-cell).
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Fixed noise power per subcarrier when no SNR sweep is given.
    #[serde(default)]
    pub noise_power: Option<f64>,
    pub trials: u32,
    pub seed: u64,
    pub schemes: Vec<SchemePair>,
    #[serde(default)]
    pub multicell: MulticellConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Fill the wall-time column. Off by default so output is reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0; self.users])
    }

    pub fn edge_weights(&self) -> Vec<f64> {
        self.edge_weights.clone().unwrap_or_else(|| vec![1.0; self.users])
    }

    pub fn multicell_params(&self) -> MulticellParams {
        let m = &self.multicell;
        MulticellParams {
            subcarriers: self.subcarriers,
            cell_radius_km: m.cell_radius_km,
            intercell_distance_km: m.intercell_distance_km,
            centre_radius_km: m.centre_radius_ratio * m.cell_radius_km,
            frf: m.frf,
            target_ber: m.target_ber,
            tx_power_dbm: m.tx_power_dbm,
            noise_density_dbm_hz: m.noise_density_dbm_hz,
            subcarrier_spacing_hz: m.subcarrier_spacing_hz,
            users: self.users,
            taps: m.taps,
            desired_signal: match m.desired_signal {
                DesiredSignalKind::PathLoss => DesiredSignal::PathLoss,
                DesiredSignalKind::Unattenuated => DesiredSignal::Unattenuated,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if self.subcarriers == 0 {
            return bad("subcarriers must be positive".into());
        }
        if self.chunk_sizes.is_empty() {
            return bad("chunk_sizes is empty".into());
        }
        if let Some(l) = self.chunk_sizes.iter().find(|&&l| l == 0 || l > self.subcarriers) {
            return bad(format!("chunk size {l} must lie in 1..={}", self.subcarriers));
        }
        if self.schemes.is_empty() {
            return bad("schemes is empty".into());
        }
        if !(self.total_power > 0.0) {
            return bad("total_power must be positive".into());
        }
        for (name, w) in [("weights", &self.weights), ("edge_weights", &self.edge_weights)] {
            if let Some(w) = w {
                if w.len() != self.users {
                    return bad(format!("{name} has {} entries for {} users", w.len(), self.users));
                }
                if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return bad(format!("{name} must be positive"));
                }
            }
        }
        match self.scenario {
            ScenarioKind::SingleCell => {
                if self.taps.len() != self.users {
                    return bad(format!("taps has {} entries for {} users", self.taps.len(), self.users));
                }
                if let Some(t) = self.taps.iter().find(|&&t| t == 0 || t > self.subcarriers) {
                    return bad(format!("tap count {t} must lie in 1..={}", self.subcarriers));
                }
                match (self.snr_db.is_empty(), self.noise_power) {
                    (true, None) => return bad("single-cell runs need snr_db or noise_power".into()),
                    (false, Some(_)) => return bad("give either snr_db or noise_power, not both".into()),
                    (_, Some(n)) if !(n > 0.0) => return bad("noise_power must be positive".into()),
                    _ => {}
                }
            }
            ScenarioKind::MultiCell | ScenarioKind::MultiCellNoFfr => {
                if !self.snr_db.is_empty() || self.noise_power.is_some() {
                    return bad("multi-cell noise comes from the [multicell] section".into());
                }
                if let Some(s) = self.schemes.iter().find(|s| s.pa != PaKind::Uniform) {
                    return bad(format!("multi-cell runs use uniform power only, got {s}"));
                }
                let m = &self.multicell;
                if !(m.cell_radius_km > 0.0 && m.intercell_distance_km > 0.0) {
                    return bad("cell radius and intercell distance must be positive".into());
                }
                if !(0.0..=1.0).contains(&m.centre_radius_ratio) {
                    return bad("centre_radius_ratio must lie in [0, 1]".into());
                }
                if m.frf != 1 && m.frf != 3 {
                    return bad(format!("frf must be 1 or 3, got {}", m.frf));
                }
                if !(m.target_ber > 0.0 && m.target_ber < 0.2) {
                    return bad("target_ber must lie in (0, 0.2)".into());
                }
                if m.taps == 0 || m.taps > self.subcarriers {
                    return bad(format!("multicell taps must lie in 1..={}", self.subcarriers));
                }
                if !(m.subcarrier_spacing_hz > 0.0) {
                    return bad("subcarrier_spacing_hz must be positive".into());
                }
            }
        }
        Ok(())
    }
}
