//! Experiment configuration: the TOML schema, defaults, validation, and the
//! fully resolved form that runs consume and reports echo.
//!
//! A config file needs only a `[scenario]` section and a `[policy] kind`;
//! everything else has documented defaults. Validation is collective: one
//! failed parse reports every problem it can find, each naming the field
//! and the constraint it violates.
//!
//! # Example
//!
//! ```
//! let text = r#"
//!     [scenario]
//!     num_users = 10
//!     num_groups = 2
//!     users_per_group = 5
//!
//!     [policy]
//!     kind = "dppdu"
//!     v = 3000.0
//! "#;
//! let config = ppdusim::config::parse_config_str(text, "inline").unwrap();
//! assert_eq!(config.scenario.num_groups, 2);
//! assert_eq!(config.fairness_targets, vec![0.65; 5]);
//! ```

use crate::model::{DurationMs, PolicyConfig, PolicyKind, TsGrid};
use crate::overhead::MacTimingConfig;
use crate::traffic::{DurationDistribution, TrafficModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

/// Default per-user fairness target (C_k).
pub const DEFAULT_FAIRNESS_TARGET: f64 = 0.65;
/// Default transmit power per user, in watts (25 dBm).
pub const DEFAULT_TX_POWER_WATTS: f64 = 0.31;
/// Default per-user mean fresh durations in milliseconds, increasing with
/// user index; apply when a group has exactly this many users.
pub const DEFAULT_MEAN_DURATIONS_MS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
/// Default Gamma shape (coefficient of variation 0.5).
pub const DEFAULT_GAMMA_SHAPE: f64 = 4.0;
/// Default reference rate converting sampled durations to bits.
pub const DEFAULT_REF_RATE_BPS: f64 = 1e6;
/// Default candidate grid: 0.05 ms steps from 0.05 to 12 ms.
pub const DEFAULT_GRID_START_MS: f64 = 0.05;
pub const DEFAULT_GRID_STEP_MS: f64 = 0.05;
pub const DEFAULT_GRID_STOP_MS: f64 = 12.0;
/// Default scheduled slots per group; the run horizon is this times the
/// number of groups unless set explicitly.
pub const DEFAULT_SLOTS_PER_GROUP: u64 = 200_000;
pub const DEFAULT_SEED: u64 = 1;
/// Energy budgets default to this multiple of the energy cost of each
/// user's mean fresh duration.
pub const DEFAULT_ENERGY_BUDGET_HEADROOM: f64 = 1.2;
/// Budget used when the traffic model defines no mean durations and no
/// explicit budgets are given: large enough that the energy constraint
/// never binds.
pub const UNCONSTRAINED_ENERGY_BUDGET_MJ: f64 = 1e9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid configuration:\n- {}", issues.join("\n- "))]
    Invalid { issues: Vec<String> },
}

// --- resolved configuration ---------------------------------------------------

/// Population sizes: N users split into L groups of K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub num_users: usize,
    pub num_groups: usize,
    pub users_per_group: usize,
}

/// Everything a run needs, fully resolved. Reports echo this verbatim, so
/// a report plus the package version pins down the whole experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub traffic: TrafficModel,
    pub policy: PolicyConfig,
    /// Per user-in-group emptying-frequency targets (C_k), length K.
    pub fairness_targets: Vec<f64>,
    /// Per user-in-group per-slot energy allowances (E_k^tot) in mJ, length K.
    pub energy_budgets_mj: Vec<f64>,
    pub tx_power_watts: f64,
    pub timing: MacTimingConfig,
    /// Total scheduling slots across all groups.
    pub horizon_slots: u64,
    pub seed: u64,
    /// Record every Nth scheduled slot of group 1; `None` disables tracing.
    pub trace_stride: Option<u64>,
    /// Where artifacts land unless the command line overrides it.
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    /// The reference setup: 100 users in 20 groups of 5, Gamma demand with
    /// means 0.2–1.0 ms, the 0.05–12 ms grid, C_k = 0.65, 0.31 W.
    pub fn reference_scenario(kind: PolicyKind) -> ExperimentConfig {
        let scenario = Scenario {
            num_users: 100,
            num_groups: 20,
            users_per_group: 5,
        };
        let grid = TsGrid::from_range(
            DEFAULT_GRID_START_MS,
            DEFAULT_GRID_STEP_MS,
            DEFAULT_GRID_STOP_MS,
        )
        .expect("default grid parameters are valid");
        let ts_max = grid.last();
        let means = DEFAULT_MEAN_DURATIONS_MS;
        ExperimentConfig {
            scenario,
            traffic: TrafficModel::SampledDurations {
                per_user: means
                    .iter()
                    .map(|&m| DurationDistribution::gamma_with_mean(m, DEFAULT_GAMMA_SHAPE))
                    .collect(),
                ref_rate_bps: DEFAULT_REF_RATE_BPS,
                carryover: false,
            },
            policy: PolicyConfig { kind, grid, ts_max },
            fairness_targets: vec![DEFAULT_FAIRNESS_TARGET; 5],
            energy_budgets_mj: means
                .iter()
                .map(|&m| DEFAULT_ENERGY_BUDGET_HEADROOM * m * DEFAULT_TX_POWER_WATTS)
                .collect(),
            tx_power_watts: DEFAULT_TX_POWER_WATTS,
            timing: MacTimingConfig::default(),
            horizon_slots: DEFAULT_SLOTS_PER_GROUP * 20,
            seed: DEFAULT_SEED,
            trace_stride: None,
            out_dir: None,
        }
    }

    /// Rate every user starts with; the traffic model overwrites it at each
    /// scheduled slot.
    pub fn initial_rate_bps(&self) -> f64 {
        match &self.traffic {
            TrafficModel::SampledDurations { ref_rate_bps, .. } => *ref_rate_bps,
            TrafficModel::RateSet { rates_bps, .. } => rates_bps[0],
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let k = self.scenario.users_per_group;
        if self.scenario.num_users == 0 {
            issues.push("scenario.num_users must be at least 1".to_string());
        }
        if self.scenario.num_groups == 0 {
            issues.push("scenario.num_groups must be at least 1".to_string());
        }
        if k == 0 {
            issues.push("scenario.users_per_group must be at least 1".to_string());
        }
        if self.scenario.num_groups * k != self.scenario.num_users {
            issues.push(format!(
                "scenario.num_users must equal num_groups × users_per_group, got {} ≠ {} × {}",
                self.scenario.num_users, self.scenario.num_groups, k
            ));
        }
        if let Err(e) = self.traffic.validate(k) {
            issues.push(format!("traffic: {e}"));
        }
        if let Err(e) = self.policy.validate() {
            issues.push(format!("policy: {e}"));
        }
        if self.fairness_targets.len() != k {
            issues.push(format!(
                "constraints.fairness_targets must list one value per group user, got {} for {}",
                self.fairness_targets.len(),
                k
            ));
        }
        for (i, &c) in self.fairness_targets.iter().enumerate() {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                issues.push(format!(
                    "constraints.fairness_targets[{i}] must lie in [0, 1], got {c}"
                ));
            }
        }
        if self.energy_budgets_mj.len() != k {
            issues.push(format!(
                "constraints.energy_budgets_mj must list one value per group user, got {} for {}",
                self.energy_budgets_mj.len(),
                k
            ));
        }
        for (i, &e) in self.energy_budgets_mj.iter().enumerate() {
            if !e.is_finite() || e < 0.0 {
                issues.push(format!(
                    "constraints.energy_budgets_mj[{i}] must be finite and non-negative, got {e}"
                ));
            }
        }
        if !(self.tx_power_watts > 0.0) || !self.tx_power_watts.is_finite() {
            issues.push(format!(
                "constraints.tx_power_watts must be positive, got {}",
                self.tx_power_watts
            ));
        }
        if let Err(e) = self.timing.validate() {
            issues.push(format!("timing: {e}"));
        }
        if self.horizon_slots < self.scenario.num_groups as u64 {
            issues.push(format!(
                "run.horizon_slots must be at least num_groups ({}) so every group is scheduled, got {}",
                self.scenario.num_groups, self.horizon_slots
            ));
        }
        if self.trace_stride == Some(0) {
            issues.push("run.trace_stride must be at least 1".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid { issues })
        }
    }

    /// Content hash of the resolved config; two runs with equal digests and
    /// equal package versions produce identical reports.
    pub fn digest(&self) -> String {
        let canonical =
            serde_json::to_string(self).expect("resolved config serializes infallibly");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

// --- raw TOML schema ------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    scenario: Option<RawScenario>,
    traffic: Option<RawTraffic>,
    policy: Option<RawPolicy>,
    constraints: Option<RawConstraints>,
    timing: Option<MacTimingConfig>,
    run: Option<RawRun>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawScenario {
    num_users: Option<usize>,
    num_groups: Option<usize>,
    users_per_group: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTraffic {
    /// "sampled-durations" (default) or "rate-set".
    mode: Option<String>,
    mean_durations_ms: Option<Vec<f64>>,
    gamma_shape: Option<f64>,
    /// Stack unserved backlog onto each fresh draw (sampled-durations only).
    carryover: Option<bool>,
    /// Zero-variance durations: every draw is exactly the mean.
    deterministic: Option<bool>,
    ref_rate_bps: Option<f64>,
    rates_bps: Option<Vec<f64>>,
    mean_arrival_bits: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawPolicy {
    /// "fixed", "throughput-optimal", "dppdu", or "eadppdu".
    kind: Option<String>,
    v: Option<f64>,
    fixed_ts_ms: Option<f64>,
    /// Explicit candidate list; mutually exclusive with the range keys.
    ts_grid_ms: Option<Vec<f64>>,
    ts_grid_start_ms: Option<f64>,
    ts_grid_step_ms: Option<f64>,
    ts_grid_stop_ms: Option<f64>,
    ts_max_ms: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConstraints {
    fairness_targets: Option<Vec<f64>>,
    energy_budgets_mj: Option<Vec<f64>>,
    tx_power_watts: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawRun {
    horizon_slots: Option<u64>,
    seed: Option<u64>,
    trace_stride: Option<u64>,
    out_dir: Option<String>,
}

// --- parsing and resolution -------------------------------------------------------

/// Reads, resolves, and validates a TOML config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: label.clone(),
        source,
    })?;
    parse_config_str(&text, &label)
}

/// Same as [`parse_config`] for already-loaded text; `label` names the
/// source in errors.
pub fn parse_config_str(text: &str, label: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
        path: label.to_string(),
        source: Box::new(source),
    })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let mut issues = Vec::new();

    // Structural requirements first: without them no defaults make sense.
    let scenario = raw.scenario.unwrap_or_default();
    let num_users = scenario.num_users;
    let num_groups = scenario.num_groups;
    let users_per_group = scenario.users_per_group;
    for (value, name) in [
        (num_users, "scenario.num_users"),
        (num_groups, "scenario.num_groups"),
        (users_per_group, "scenario.users_per_group"),
    ] {
        if value.is_none() {
            issues.push(format!("{name} is required"));
        }
    }
    let policy_raw = raw.policy.unwrap_or_default();
    if policy_raw.kind.is_none() {
        issues.push(
            "policy.kind is required (one of \"fixed\", \"throughput-optimal\", \"dppdu\", \"eadppdu\")"
                .to_string(),
        );
    }
    if !issues.is_empty() {
        return Err(ConfigError::Invalid { issues });
    }
    let scenario = Scenario {
        num_users: num_users.unwrap(),
        num_groups: num_groups.unwrap(),
        users_per_group: users_per_group.unwrap(),
    };
    let k = scenario.users_per_group;

    // Traffic.
    let traffic_raw = raw.traffic.unwrap_or_default();
    let mode = traffic_raw.mode.as_deref().unwrap_or("sampled-durations");
    let traffic = match mode {
        "sampled-durations" => {
            let means = match traffic_raw.mean_durations_ms {
                Some(m) => m,
                None if k == DEFAULT_MEAN_DURATIONS_MS.len() => {
                    DEFAULT_MEAN_DURATIONS_MS.to_vec()
                }
                None => {
                    issues.push(format!(
                        "traffic.mean_durations_ms is required when users_per_group is {k} (defaults exist only for {} users)",
                        DEFAULT_MEAN_DURATIONS_MS.len()
                    ));
                    Vec::new()
                }
            };
            let shape = traffic_raw.gamma_shape.unwrap_or(DEFAULT_GAMMA_SHAPE);
            let deterministic = traffic_raw.deterministic.unwrap_or(false);
            let per_user = means
                .iter()
                .map(|&m| {
                    if deterministic {
                        DurationDistribution::Deterministic { value_ms: m }
                    } else {
                        DurationDistribution::gamma_with_mean(m, shape)
                    }
                })
                .collect();
            TrafficModel::SampledDurations {
                per_user,
                ref_rate_bps: traffic_raw.ref_rate_bps.unwrap_or(DEFAULT_REF_RATE_BPS),
                carryover: traffic_raw.carryover.unwrap_or(false),
            }
        }
        "rate-set" => {
            let rates_bps = traffic_raw.rates_bps.unwrap_or_default();
            let mean_arrival_bits = traffic_raw.mean_arrival_bits.unwrap_or_default();
            if rates_bps.is_empty() {
                issues.push("traffic.rates_bps is required in rate-set mode".to_string());
            }
            if mean_arrival_bits.is_empty() {
                issues.push("traffic.mean_arrival_bits is required in rate-set mode".to_string());
            }
            if traffic_raw.carryover.is_some() {
                issues.push(
                    "traffic.carryover applies only to sampled-durations mode; rate-set queues always accumulate"
                        .to_string(),
                );
            }
            TrafficModel::RateSet {
                rates_bps,
                mean_arrival_bits,
            }
        }
        other => {
            issues.push(format!(
                "traffic.mode must be \"sampled-durations\" or \"rate-set\", got \"{other}\""
            ));
            TrafficModel::RateSet {
                rates_bps: vec![1.0],
                mean_arrival_bits: vec![0.0; k],
            }
        }
    };

    // Candidate grid and duration cap.
    let grid = if let Some(values) = policy_raw.ts_grid_ms {
        if policy_raw.ts_grid_start_ms.is_some()
            || policy_raw.ts_grid_step_ms.is_some()
            || policy_raw.ts_grid_stop_ms.is_some()
        {
            issues.push(
                "policy.ts_grid_ms and the ts_grid_start/step/stop keys are mutually exclusive"
                    .to_string(),
            );
        }
        TsGrid::new(values)
    } else {
        TsGrid::from_range(
            policy_raw.ts_grid_start_ms.unwrap_or(DEFAULT_GRID_START_MS),
            policy_raw.ts_grid_step_ms.unwrap_or(DEFAULT_GRID_STEP_MS),
            policy_raw.ts_grid_stop_ms.unwrap_or(DEFAULT_GRID_STOP_MS),
        )
    };
    let grid = match grid {
        Ok(grid) => grid,
        Err(e) => {
            issues.push(format!("policy grid: {e}"));
            TsGrid::new(vec![1.0]).expect("fallback grid is valid")
        }
    };
    let ts_max = match policy_raw.ts_max_ms {
        Some(v) => match DurationMs::from_ms(v) {
            Ok(d) => d,
            Err(e) => {
                issues.push(format!("policy.ts_max_ms: {e}"));
                grid.last()
            }
        },
        None => grid.last(),
    };

    // Policy kind.
    let kind_name = policy_raw.kind.as_deref().unwrap();
    let kind = match kind_name {
        "fixed" => match policy_raw.fixed_ts_ms {
            Some(v) => match DurationMs::from_ms(v) {
                Ok(ts_ms) => Some(PolicyKind::Fixed { ts_ms }),
                Err(e) => {
                    issues.push(format!("policy.fixed_ts_ms: {e}"));
                    None
                }
            },
            None => {
                issues.push("policy.fixed_ts_ms is required for kind = \"fixed\"".to_string());
                None
            }
        },
        "throughput-optimal" => Some(PolicyKind::ThroughputOptimal),
        "dppdu" | "eadppdu" => match policy_raw.v {
            Some(v) => Some(if kind_name == "dppdu" {
                PolicyKind::Dppdu { v }
            } else {
                PolicyKind::EadPpdu { v }
            }),
            None => {
                issues.push(format!(
                    "policy.v is required for kind = \"{kind_name}\""
                ));
                None
            }
        },
        other => {
            issues.push(format!(
                "policy.kind must be one of \"fixed\", \"throughput-optimal\", \"dppdu\", \"eadppdu\", got \"{other}\""
            ));
            None
        }
    };
    let policy = PolicyConfig {
        kind: kind.unwrap_or(PolicyKind::ThroughputOptimal),
        grid,
        ts_max,
    };

    // Constraints.
    let constraints = raw.constraints.unwrap_or_default();
    let fairness_targets = constraints
        .fairness_targets
        .unwrap_or_else(|| vec![DEFAULT_FAIRNESS_TARGET; k]);
    let tx_power_watts = constraints
        .tx_power_watts
        .unwrap_or(DEFAULT_TX_POWER_WATTS);
    let energy_budgets_mj = constraints.energy_budgets_mj.unwrap_or_else(|| {
        match traffic.mean_durations_ms() {
            Some(means) => means
                .iter()
                .map(|&m| DEFAULT_ENERGY_BUDGET_HEADROOM * m * tx_power_watts)
                .collect(),
            None => vec![UNCONSTRAINED_ENERGY_BUDGET_MJ; k],
        }
    });

    // Run parameters.
    let run = raw.run.unwrap_or_default();
    let config = ExperimentConfig {
        scenario,
        traffic,
        policy,
        fairness_targets,
        energy_budgets_mj,
        tx_power_watts,
        timing: raw.timing.unwrap_or_default(),
        horizon_slots: run
            .horizon_slots
            .unwrap_or(DEFAULT_SLOTS_PER_GROUP * scenario.num_groups as u64),
        seed: run.seed.unwrap_or(DEFAULT_SEED),
        trace_stride: run.trace_stride,
        out_dir: run.out_dir,
    };

    match config.validate() {
        Ok(()) if issues.is_empty() => Ok(config),
        Ok(()) => Err(ConfigError::Invalid { issues }),
        Err(ConfigError::Invalid { issues: more }) => {
            issues.extend(more);
            issues.dedup();
            Err(ConfigError::Invalid { issues })
        }
        Err(other) => Err(other),
    }
}

// --- tests -----------------------------------------------------------------
