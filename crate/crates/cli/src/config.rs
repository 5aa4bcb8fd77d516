//! TOML run configuration. Every power carries an explicit unit and unknown
//! keys are rejected.

use serde::Deserialize;
use wetsim::channel::CorrelationMatrix;
use wetsim::eh::{dbm_to_linear, EhModel};
use wetsim::mc::ScenarioConfig;
use wetsim::strategies::StrategyId;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum PowerUnit {
    #[serde(rename = "dBm")]
    Dbm,
    #[serde(rename = "mW")]
    Mw,
    #[serde(rename = "dBW")]
    Dbw,
    #[serde(rename = "W")]
    W,
}

impl PowerUnit {
    /// Converts `v` in this unit to mW.
    pub fn to_mw(self, v: f64) -> f64 {
        match self {
            Self::Dbm => dbm_to_linear(v),
            Self::Mw => v,
            Self::Dbw => dbm_to_linear(v + 30.0),
            Self::W => 1e3 * v,
        }
    }

    pub fn is_log(self) -> bool {
        matches!(self, Self::Dbm | Self::Dbw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Power {
    pub value: f64,
    pub unit: PowerUnit,
}

impl Power {
    pub fn mw(&self) -> f64 {
        self.unit.to_mw(self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// A list of powers, either explicit or as an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PowerSweep {
    List { values: Vec<f64>, unit: PowerUnit },
    Range { start: f64, stop: f64, points: usize, spacing: Spacing, unit: PowerUnit },
}

impl PowerSweep {
    /// `(value as written, value in mW)` pairs.
    pub fn points(&self, field: &str) -> Result<Vec<(f64, f64)>, CliError> {
        let (raw, unit) = match self {
            Self::List { values, unit } => (values.clone(), *unit),
            Self::Range { start, stop, points, spacing, unit } => {
                if *points == 0 {
                    return Err(CliError::config(field, "points must be at least 1"));
                }
                let n = *points;
                let at = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                let v = match spacing {
                    Spacing::Linear => (0..n).map(|i| start + (stop - start) * at(i)).collect(),
                    Spacing::Log => {
                        if !(*start > 0.0 && *stop > 0.0) {
                            return Err(CliError::config(field, "log spacing needs positive start and stop"));
                        }
                        let (a, b) = (start.ln(), stop.ln());
                        (0..n).map(|i| (a + (b - a) * at(i)).exp()).collect()
                    }
                };
                (v, *unit)
            }
        };
        if raw.is_empty() {
            return Err(CliError::config(field, "sweep is empty"));
        }
        let out: Vec<(f64, f64)> = raw.iter().map(|&v| (v, unit.to_mw(v))).collect();
        if out.iter().any(|(_, mw)| !mw.is_finite() || *mw < 0.0) {
            return Err(CliError::config(field, "powers must be finite and non-negative"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CorrelationSpec {
    Identity,
    Uniform { rho: f64 },
    Exponential { tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub antennas: usize,
    pub kappa: f64,
    pub correlation: CorrelationSpec,
}

impl ChannelSection {
    pub fn matrix(&self) -> Result<CorrelationMatrix, CliError> {
        let m = self.antennas;
        let r = match self.correlation {
            CorrelationSpec::Identity => CorrelationMatrix::identity(m),
            CorrelationSpec::Uniform { rho } => CorrelationMatrix::uniform(m, rho),
            CorrelationSpec::Exponential { tau } => CorrelationMatrix::exponential(m, tau),
        };
        r.map_err(|e| CliError::config("channel.correlation", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ideal,
    Piecewise,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvesterSection {
    pub model: ModelKind,
    pub eta: Option<f64>,
    pub sensitivity: Option<Power>,
    pub saturation: Option<Power>,
    /// Logistic constants (`p2`, `p3` in µW); the reference fit when omitted.
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
}

impl HarvesterSection {
    pub fn eta(&self) -> Result<f64, CliError> {
        self.eta.ok_or_else(|| CliError::config("harvester.eta", "required for the linear models"))
    }

    pub fn model(&self) -> Result<EhModel, CliError> {
        let r = match self.model {
            ModelKind::Ideal => EhModel::ideal(self.eta()?),
            ModelKind::Piecewise => {
                let w1 = self.sensitivity.ok_or_else(|| CliError::config("harvester.sensitivity", "required"))?;
                let w2 = self.saturation.ok_or_else(|| CliError::config("harvester.saturation", "required"))?;
                EhModel::piecewise(self.eta()?, w1.mw(), w2.mw())
            }
            ModelKind::Logistic => self.logistic(),
        };
        r.map_err(|e| CliError::config("harvester", e.to_string()))
    }

    /// Ideal-linear model with this section's efficiency.
    pub fn ideal(&self) -> Result<EhModel, CliError> {
        EhModel::ideal(self.eta()?).map_err(|e| CliError::config("harvester.eta", e.to_string()))
    }

    pub fn logistic(&self) -> wetsim::Result<EhModel> {
        let EhModel::Logistic { p1, p2, p3 } = EhModel::reference_logistic() else { unreachable!() };
        EhModel::logistic(self.p1.unwrap_or(p1), self.p2.unwrap_or(p2), self.p3.unwrap_or(p3))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    /// Average link gain `ϱ`.
    pub rho: Power,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub strategies: Vec<String>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub strategy: String,
    pub samples: usize,
    pub points: Option<usize>,
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutageSection {
    pub strategies: Vec<String>,
    pub samples: usize,
    /// Energy thresholds `ξ_th`.
    pub thresholds: PowerSweep,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvgHarvestSection {
    pub strategies: Vec<String>,
    pub samples: usize,
    /// Sweep of the link gain `ϱ`.
    pub rho: PowerSweep,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiuserSection {
    /// `|S|` values swept at `antennas`.
    pub users: Vec<usize>,
    pub antennas: usize,
    /// `M` values swept at `fairness_users` for the fairness table.
    pub fairness_antennas: Vec<usize>,
    pub fairness_users: usize,
    pub strategies: Vec<String>,
    pub placements: usize,
    pub draws: usize,
    /// Smaller budgets for the beamforming search, which dominates runtime.
    pub aa_csi_placements: Option<usize>,
    pub aa_csi_draws: Option<usize>,
    pub aa_csi_budget: Option<usize>,
    pub outage_threshold: Power,
    pub radius: Option<f64>,
    pub pathloss_exponent: Option<f64>,
    pub link_budget_divisor: Option<f64>,
    pub kappa_amplitude: Option<f64>,
    pub kappa_decay: Option<f64>,
    pub tau_decay: Option<f64>,
}

impl MultiuserSection {
    pub fn scenario(&self, model: EhModel, seed: u64, workers: usize) -> ScenarioConfig {
        let d = ScenarioConfig::default();
        ScenarioConfig {
            radius: self.radius.unwrap_or(d.radius),
            pathloss_exponent: self.pathloss_exponent.unwrap_or(d.pathloss_exponent),
            link_budget_divisor: self.link_budget_divisor.unwrap_or(d.link_budget_divisor),
            kappa_amplitude: self.kappa_amplitude.unwrap_or(d.kappa_amplitude),
            kappa_decay: self.kappa_decay.unwrap_or(d.kappa_decay),
            tau_decay: self.tau_decay.unwrap_or(d.tau_decay),
            n_users: 1,
            m_antennas: self.antennas,
            strategies: vec![],
            eh_model: model,
            placements: self.placements,
            draws_per_placement: self.draws,
            seed,
            outage_threshold: self.outage_threshold.mw(),
            aa_csi_budget: self.aa_csi_budget,
            workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub ordering_draws: usize,
    pub mc_samples: usize,
    pub ks_samples: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self { ordering_draws: 2_000, mc_samples: 200_000, ks_samples: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; defaults to the number of logical cores.
    pub workers: Option<usize>,
    pub channel: Option<ChannelSection>,
    pub harvester: Option<HarvesterSection>,
    pub link: Option<LinkSection>,
    pub stats: Option<StatsSection>,
    pub pdf: Option<DensitySection>,
    pub cdf: Option<DensitySection>,
    pub outage: Option<OutageSection>,
    pub avg_harvest: Option<AvgHarvestSection>,
    pub multiuser: Option<MultiuserSection>,
    pub validate: Option<ValidateSection>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }

    pub fn channel(&self) -> Result<&ChannelSection, CliError> {
        self.channel.as_ref().ok_or_else(|| CliError::config("channel", "section required by this command"))
    }

    pub fn harvester(&self) -> Result<&HarvesterSection, CliError> {
        self.harvester.as_ref().ok_or_else(|| CliError::config("harvester", "section required by this command"))
    }

    pub fn rho(&self) -> Result<f64, CliError> {
        let link = self.link.as_ref().ok_or_else(|| CliError::config("link", "section required by this command"))?;
        let v = link.rho.mw();
        if !(v > 0.0) || !v.is_finite() {
            return Err(CliError::config("link.rho", format!("must be positive, got {v} mW")));
        }
        Ok(v)
    }
}

pub fn parse_strategies(names: &[String], field: &str) -> Result<Vec<StrategyId>, CliError> {
    if names.is_empty() {
        return Err(CliError::config(field, "list is empty"));
    }
    names.iter().map(|n| parse_strategy(n, field)).collect()
}

pub fn parse_strategy(name: &str, field: &str) -> Result<StrategyId, CliError> {
    name.parse().map_err(|e: wetsim::Error| CliError::config(field, e.to_string()))
}

pub fn require<T>(v: &Option<T>, field: &str) -> Result<T, CliError>
where
    T: Clone,
{
    v.clone().ok_or_else(|| CliError::config(field, "section required by this command"))
}
