//! Run configuration: JSON schema, defaults and named presets.
//!
//! Every field has a default, so `{}` is a complete configuration describing
//! the standard two-network setup with one DUT. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::dualspeed::DualSpeedModel;
use crate::error::ConfigError;
use crate::harness::testbed::TestbedConfig;
use crate::market::PriceRange;
use crate::netsim::{NetworkModel, RadioParams};
use crate::policies::PolicySpec;
use crate::types::{AppProfile, UtilityKind};

/// The learning signal handed to agents. Welfare is always raw utility.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Throughput-to-price utility.
    #[default]
    Utility,
    /// Decile rank of the utility against the DUT's own history for the same
    /// app and provider; the raw utility is used while that history is empty.
    Decile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralConfig {
    pub steps: usize,
    pub training_steps: usize,
    pub iterations: usize,
    /// Master seed. When absent, callers draw one from entropy and report it.
    pub seed: Option<u64>,
    /// Hexagon radius: sets site spacing and the unit of grid offsets.
    pub cell_radius_m: f64,
    /// Radius of the whole site grid. `None` derives it from the cell radius
    /// and site count; when set, the layout is scaled so its outermost sites
    /// sit this far from the first site.
    pub grid_radius_m: Option<f64>,
    pub walk_length_m: f64,
    pub duts: usize,
    /// Forces a 1 m walk so the radio environment stays put.
    pub fixed_location: bool,
    /// Pins every provider to its minimum cost.
    pub fixed_price: bool,
    /// Default channel bandwidth for networks that do not set their own.
    pub bandwidth_hz: f64,
    /// Radius of the disc around each network's layout center where
    /// background UEs are dropped. `None` uses the layout's coverage radius.
    pub background_radius_m: Option<f64>,
    pub reward: RewardMode,
    /// Discount factor for the diagnostic return reported per run.
    pub discount: f64,
    /// Wall-clock length of a ledger epoch. Informational only; a simulation
    /// step is one epoch.
    pub epoch_minutes: f64,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            training_steps: 30,
            iterations: 100,
            seed: None,
            cell_radius_m: 1666.0,
            grid_radius_m: None,
            walk_length_m: 20.0,
            duts: 1,
            fixed_location: false,
            fixed_price: false,
            bandwidth_hz: 10e6,
            background_radius_m: Some(8000.0),
            reward: RewardMode::Utility,
            discount: 0.7,
            epoch_minutes: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub power_dbm: f64,
    #[serde(default)]
    pub background_ues: usize,
    #[serde(default = "default_bs_count")]
    pub bs_count: usize,
    /// Grid offset in units of the cell radius.
    #[serde(default)]
    pub offset: (f64, f64),
    pub min_cost: f64,
    pub max_cost: f64,
    #[serde(default)]
    pub bandwidth_hz: Option<f64>,
}

fn default_bs_count() -> usize {
    36
}

impl NetworkConfig {
    pub fn price_range(&self, fixed_price: bool) -> PriceRange {
        if fixed_price {
            PriceRange::fixed(self.min_cost)
        } else {
            PriceRange {
                min_cost: self.min_cost,
                max_cost: self.max_cost,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandConfig {
    pub apps: Vec<UtilityKind>,
    /// Row-stochastic app transition matrix.
    pub transition: Vec<Vec<f64>>,
}

impl DemandConfig {
    pub fn profiles(&self) -> Vec<AppProfile> {
        self.apps
            .iter()
            .enumerate()
            .map(|(i, k)| AppProfile::new(i, *k))
            .collect()
    }
}

impl Default for DemandConfig {
    fn default() -> Self {
        Self {
            apps: vec![UtilityKind::interactive(12.0), UtilityKind::Batch],
            transition: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub general: GeneralConfig,
    pub radio: RadioParams,
    pub networks: Vec<NetworkConfig>,
    /// Either one profile shared (independently sampled) by every DUT, or
    /// one profile per DUT.
    pub demand: Vec<DemandConfig>,
    pub policies: Vec<PolicySpec>,
    /// Popularity-driven price dynamics replacing the two-point price draw.
    pub dual_speed: Option<DualSpeedModel>,
    /// Deterministic capacity experiment settings.
    pub testbed: Option<TestbedConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            general: GeneralConfig::default(),
            radio: RadioParams::default(),
            networks: vec![
                NetworkConfig {
                    name: Some("Network 1".into()),
                    power_dbm: 30.0,
                    background_ues: 72,
                    bs_count: 36,
                    offset: (0.6, 0.4),
                    min_cost: 1.0,
                    max_cost: 2.0,
                    bandwidth_hz: Some(5e6),
                },
                NetworkConfig {
                    name: Some("Network 2".into()),
                    power_dbm: 100.0,
                    background_ues: 0,
                    bs_count: 36,
                    offset: (0.0, 0.0),
                    min_cost: 9.0,
                    max_cost: 10.0,
                    bandwidth_hz: Some(3e6),
                },
            ],
            demand: vec![DemandConfig::default()],
            policies: PolicySpec::benchmark_set(),
            dual_speed: None,
            testbed: None,
        }
    }
}

/// Named configurations for the standard experiments.
pub const PRESETS: [&str; 7] = [
    "default",
    "fixed-location-fixed-price",
    "fixed-location-variable-price",
    "variable-location-fixed-price",
    "variable-location-variable-price",
    "competing",
    "training",
];

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn preset(name: &str) -> Option<Self> {
        let mut cfg = RunConfig::default();
        let (fixed_location, fixed_price) = match name {
            "default" | "variable-location-variable-price" => (false, false),
            "fixed-location-fixed-price" => (true, true),
            "fixed-location-variable-price" => (true, false),
            "variable-location-fixed-price" => (false, true),
            "competing" => {
                cfg.general.duts = 3;
                (false, false)
            }
            "training" => {
                cfg.testbed = Some(TestbedConfig::training_experiment());
                (false, false)
            }
            _ => return None,
        };
        if fixed_location {
            cfg.general.walk_length_m = 1.0;
        }
        if fixed_price {
            for net in &mut cfg.networks {
                net.max_cost = net.min_cost;
            }
        }
        Some(cfg)
    }

    /// Walk length after applying the fixed-location switch.
    pub fn walk_length_m(&self) -> f64 {
        if self.general.fixed_location {
            1.0
        } else {
            self.general.walk_length_m
        }
    }

    pub fn price_ranges(&self) -> Vec<PriceRange> {
        self.networks
            .iter()
            .map(|n| n.price_range(self.general.fixed_price))
            .collect()
    }

    /// Possible prices per provider, used to key (app, price) Q-tables.
    pub fn price_levels(&self) -> Vec<Vec<f64>> {
        match &self.dual_speed {
            Some(ds) => vec![ds.price_labels.clone(); self.networks.len()],
            None => self
                .price_ranges()
                .iter()
                .map(|r| {
                    if r.is_fixed() {
                        vec![r.min_cost]
                    } else {
                        vec![r.min_cost, r.max_cost]
                    }
                })
                .collect(),
        }
    }

    pub fn demand_for(&self, dut: usize) -> &DemandConfig {
        if self.demand.len() == 1 {
            &self.demand[0]
        } else {
            &self.demand[dut]
        }
    }

    pub fn network_bandwidth(&self, net: usize) -> f64 {
        self.networks[net]
            .bandwidth_hz
            .unwrap_or(self.general.bandwidth_hz)
    }

    pub fn build_networks(&self) -> Vec<NetworkModel> {
        self.networks
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut net = NetworkModel::hexagonal(
                    n.bs_count,
                    self.general.cell_radius_m,
                    n.offset,
                    n.power_dbm,
                    self.network_bandwidth(i),
                );
                if let Some(target) = self.general.grid_radius_m {
                    net.rescale_grid(target);
                }
                net
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.general;
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(
                    field,
                    format!("must be positive, got {v}"),
                ))
            }
        };
        if g.steps == 0 {
            return Err(ConfigError::invalid("general.steps", "must be at least 1"));
        }
        if g.training_steps > g.steps {
            return Err(ConfigError::invalid(
                "general.training_steps",
                "cannot exceed general.steps",
            ));
        }
        if g.iterations == 0 {
            return Err(ConfigError::invalid(
                "general.iterations",
                "must be at least 1",
            ));
        }
        if g.duts == 0 {
            return Err(ConfigError::invalid("general.duts", "must be at least 1"));
        }
        positive("general.cell_radius_m", g.cell_radius_m)?;
        if let Some(r) = g.grid_radius_m {
            positive("general.grid_radius_m", r)?;
        }
        positive("general.walk_length_m", g.walk_length_m)?;
        positive("general.bandwidth_hz", g.bandwidth_hz)?;
        if let Some(r) = g.background_radius_m {
            positive("general.background_radius_m", r)?;
        }
        if !(0.0..1.0).contains(&g.discount) {
            return Err(ConfigError::invalid(
                "general.discount",
                "must lie in [0, 1)",
            ));
        }
        positive("radio.efficiency_cap", self.radio.efficiency_cap)?;
        if self.networks.is_empty() {
            return Err(ConfigError::invalid(
                "networks",
                "at least one network is required",
            ));
        }
        for (i, n) in self.networks.iter().enumerate() {
            let field = |f: &str| format!("networks[{i}].{f}");
            if n.bs_count == 0 {
                return Err(ConfigError::invalid(
                    field("bs_count"),
                    "must be at least 1",
                ));
            }
            if !n.power_dbm.is_finite() {
                return Err(ConfigError::invalid(field("power_dbm"), "must be finite"));
            }
            if let Some(bw) = n.bandwidth_hz {
                positive(&field("bandwidth_hz"), bw)?;
            }
            PriceRange {
                min_cost: n.min_cost,
                max_cost: n.max_cost,
            }
            .validate()
            .map_err(|e| ConfigError::invalid(field("min_cost"), e.to_string()))?;
        }
        if self.demand.is_empty() || (self.demand.len() != 1 && self.demand.len() != g.duts) {
            return Err(ConfigError::invalid(
                "demand",
                format!(
                    "expected one shared profile or {} per-DUT profiles, got {}",
                    g.duts,
                    self.demand.len()
                ),
            ));
        }
        for (i, d) in self.demand.iter().enumerate() {
            if d.apps.is_empty() {
                return Err(ConfigError::invalid(
                    format!("demand[{i}].apps"),
                    "at least one app is required",
                ));
            }
            for (j, k) in d.apps.iter().enumerate() {
                k.validate(&format!("demand[{i}].apps[{j}]"))?;
            }
            crate::demand::validate_stochastic(&d.transition).map_err(|e| {
                ConfigError::invalid(format!("demand[{i}].transition"), e.to_string())
            })?;
            if d.transition.len() != d.apps.len() {
                return Err(ConfigError::invalid(
                    format!("demand[{i}].transition"),
                    "needs one row per app",
                ));
            }
        }
        for (i, p) in self.policies.iter().enumerate() {
            p.validate()
                .map_err(|e| ConfigError::invalid(format!("policies[{i}]"), e.to_string()))?;
        }
        if let Some(ds) = &self.dual_speed {
            let mut ds = ds.clone();
            ds.prepare()
                .map_err(|e| ConfigError::invalid("dual_speed", e.to_string()))?;
        }
        if let Some(tb) = &self.testbed {
            tb.validate()?;
        }
        Ok(())
    }
}
