//! Core quantities of the uplink scheduling model: queues, required
//! transmission durations, padding, fairness indicators, and slot energy.
//!
//! Conventions used across the whole crate: durations are milliseconds,
//! queues are bits, rates are bits/second, energy is millijoules and power
//! is watts (so `ms × W = mJ` without conversion factors).
//!
//! # Example
//!
//! ```
//! use ppdusim::model::{self, DurationMs};
//!
//! let t = model::required_duration(1000.0, 1e6).unwrap();
//! assert_eq!(t, DurationMs::from_ms(1.0).unwrap());
//! let pad = model::padding_overhead(DurationMs::from_ms(1.5).unwrap(), t);
//! assert_eq!(pad.ms(), 0.5);
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

// --- errors ------------------------------------------------------------

/// Validation failures for model-level values.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("transmission rate must be positive, got {0} bps")]
    NonPositiveRate(f64),
    #[error("duration must be finite and non-negative, got {0} ms")]
    InvalidDuration(f64),
    #[error("queue size must be finite and non-negative, got {0} bits")]
    InvalidQueue(f64),
    #[error("scheduling duration is 0 while {0} bits are backlogged")]
    ZeroDurationWithBacklog(f64),
    #[error("fairness target must lie in [0, 1], got {0}")]
    FairnessTargetOutOfRange(f64),
    #[error("per-slot energy budget must be finite and non-negative, got {0} mJ")]
    InvalidEnergyBudget(f64),
    #[error("transmit power must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("candidate grid {0}")]
    InvalidGrid(String),
    #[error("fixed scheduling duration {0} ms is not one of the grid candidates")]
    FixedTsOffGrid(f64),
    #[error("expected a fixed-duration policy, got {0}")]
    NotFixedPolicy(&'static str),
    #[error("positive weight required, got {0}")]
    NonPositiveWeight(f64),
}

// --- durations ----------------------------------------------------------

/// A non-negative, finite span of time in milliseconds.
///
/// The invariant (finite, `>= 0`) is established by [`DurationMs::from_ms`]
/// and preserved by every arithmetic helper, so downstream code can treat
/// comparisons as a total order.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DurationMs(f64);

impl DurationMs {
    pub const ZERO: DurationMs = DurationMs(0.0);

    pub fn from_ms(ms: f64) -> Result<Self, ModelError> {
        if !ms.is_finite() || ms < 0.0 {
            return Err(ModelError::InvalidDuration(ms));
        }
        Ok(DurationMs(ms))
    }

    /// Constructor for values already known to satisfy the invariant.
    pub(crate) fn raw(ms: f64) -> Self {
        debug_assert!(ms.is_finite() && ms >= 0.0, "invalid duration {ms}");
        DurationMs(ms)
    }

    pub fn ms(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// `max(self - other, 0)`.
    pub fn saturating_sub(self, other: DurationMs) -> DurationMs {
        DurationMs((self.0 - other.0).max(0.0))
    }

    pub fn min(self, other: DurationMs) -> DurationMs {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: DurationMs) -> DurationMs {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// Bits a transmitter moving at `rate_bps` sends within this duration.
    pub fn bits_at(self, rate_bps: f64) -> f64 {
        rate_bps * self.0 / 1000.0
    }
}

impl std::fmt::Display for DurationMs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ms", self.0)
    }
}

// --- per-user and per-group state ----------------------------------------

/// One station's uplink state: its data queue, transmission rate, the two
/// virtual queues that drive the dynamic policies, and its per-slot targets.
///
/// `fairness_vq` (X_k) tracks the deficit of the long-run emptying-frequency
/// constraint `avg F_k >= fairness_target`; `energy_vq` (Y_k) tracks the
/// surplus of the long-run energy constraint `avg E_k <= energy_budget_mj`.
/// Both start at 0 and stay non-negative under the update rules in
/// [`crate::policies`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserState {
    pub queue_bits: f64,
    pub rate_bps: f64,
    pub fairness_vq: f64,
    pub energy_vq: f64,
    /// Target fraction of scheduled slots in which this user's queue empties (C_k).
    pub fairness_target: f64,
    /// Per-scheduled-slot energy allowance in millijoules (E_k^tot).
    pub energy_budget_mj: f64,
    pub tx_power_watts: f64,
}

impl UserState {
    /// A user with an empty queue and zeroed virtual queues.
    pub fn new(
        rate_bps: f64,
        fairness_target: f64,
        energy_budget_mj: f64,
        tx_power_watts: f64,
    ) -> Result<Self, ModelError> {
        if !(rate_bps > 0.0) || !rate_bps.is_finite() {
            return Err(ModelError::NonPositiveRate(rate_bps));
        }
        if !(0.0..=1.0).contains(&fairness_target) || !fairness_target.is_finite() {
            return Err(ModelError::FairnessTargetOutOfRange(fairness_target));
        }
        if !energy_budget_mj.is_finite() || energy_budget_mj < 0.0 {
            return Err(ModelError::InvalidEnergyBudget(energy_budget_mj));
        }
        if !(tx_power_watts > 0.0) || !tx_power_watts.is_finite() {
            return Err(ModelError::NonPositivePower(tx_power_watts));
        }
        Ok(UserState {
            queue_bits: 0.0,
            rate_bps,
            fairness_vq: 0.0,
            energy_vq: 0.0,
            fairness_target,
            energy_budget_mj,
            tx_power_watts,
        })
    }

    /// Time needed to drain the current backlog at the current rate.
    pub fn required_duration(&self) -> Result<DurationMs, ModelError> {
        required_duration(self.queue_bits, self.rate_bps)
    }
}

/// The K stations that share one scheduling slot.
#[derive(Debug, Clone)]
pub struct GroupState {
    pub group_id: usize,
    pub users: Vec<UserState>,
}

impl GroupState {
    pub fn new(group_id: usize, users: Vec<UserState>) -> Self {
        GroupState { group_id, users }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}

// --- per-slot decision inputs and outcomes -------------------------------

/// Decision-time snapshot of one user: backlog, rate, and the duration the
/// backlog requires. Policies read these; they never touch `UserState`
/// directly, which keeps choice functions pure.
#[derive(Debug, Clone, Copy)]
pub struct SlotDemand {
    pub required: DurationMs,
    pub queue_bits: f64,
    pub rate_bps: f64,
}

impl SlotDemand {
    pub fn new(queue_bits: f64, rate_bps: f64) -> Result<Self, ModelError> {
        Ok(SlotDemand {
            required: required_duration(queue_bits, rate_bps)?,
            queue_bits,
            rate_bps,
        })
    }
}

/// What one scheduled slot did to one user.
#[derive(Debug, Clone, Copy)]
pub struct PerUserOutcome {
    pub served_bits: f64,
    /// H_k: time spent transmitting null bits after the real data ran out.
    pub padding: DurationMs,
    /// F_k: whether the chosen duration covered this user's whole backlog.
    pub emptied: bool,
    /// E_k: energy spent transmitting for the whole chosen duration.
    pub energy_mj: f64,
}

/// The chosen scheduling duration plus its per-user consequences.
#[derive(Debug, Clone)]
pub struct SlotDecision {
    pub ts: DurationMs,
    pub per_user: Vec<PerUserOutcome>,
}

impl SlotDecision {
    /// H_tot: summed padding across the group, in milliseconds.
    pub fn total_padding_ms(&self) -> f64 {
        self.per_user.iter().map(|u| u.padding.ms()).sum()
    }

    /// S_tot: number of users whose queue the slot emptied.
    pub fn total_emptied(&self) -> usize {
        self.per_user.iter().filter(|u| u.emptied).count()
    }
}

// --- policy configuration -------------------------------------------------

/// Which scheduling-duration rule a run uses.
///
/// `Fixed` announces the same duration every slot. `ThroughputOptimal`
/// follows the shortest backlog. `Dppdu` minimizes padding subject to the
/// per-user emptying-frequency constraints; `EadPpdu` maximizes emptied
/// queues subject to the per-user energy budgets. `v` is the
/// constraint-versus-objective weight: larger values favor the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    Fixed { ts_ms: DurationMs },
    ThroughputOptimal,
    Dppdu { v: f64 },
    EadPpdu { v: f64 },
}

impl PolicyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Fixed { .. } => "fixed",
            PolicyKind::ThroughputOptimal => "throughput-optimal",
            PolicyKind::Dppdu { .. } => "dppdu",
            PolicyKind::EadPpdu { .. } => "eadppdu",
        }
    }

    pub fn v(&self) -> Option<f64> {
        match self {
            PolicyKind::Dppdu { v } | PolicyKind::EadPpdu { v } => Some(*v),
            _ => None,
        }
    }

    /// Replaces the weight on policies that carry one.
    pub fn with_v(&self, v: f64) -> Option<PolicyKind> {
        match self {
            PolicyKind::Dppdu { .. } => Some(PolicyKind::Dppdu { v }),
            PolicyKind::EadPpdu { .. } => Some(PolicyKind::EadPpdu { v }),
            _ => None,
        }
    }
}

/// The discrete set of scheduling durations a policy may announce.
///
/// Values are strictly increasing and positive. Built either from an
/// explicit list or from an arithmetic progression; progression values are
/// computed as `start + i*step` (not cumulatively) so they carry no
/// accumulated rounding drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TsGrid {
    values: Vec<DurationMs>,
}

/// Slack used when testing whether an externally supplied duration sits on
/// the grid: one picosecond, far below any physically meaningful step.
const GRID_MEMBERSHIP_TOL_MS: f64 = 1e-9;

impl TsGrid {
    pub fn new(values_ms: Vec<f64>) -> Result<Self, ModelError> {
        if values_ms.is_empty() {
            return Err(ModelError::InvalidGrid("must be nonempty".into()));
        }
        let mut values = Vec::with_capacity(values_ms.len());
        let mut prev = 0.0;
        for (i, &v) in values_ms.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(ModelError::InvalidGrid(format!(
                    "values must be positive and finite, got {v} at index {i}"
                )));
            }
            if v <= prev {
                return Err(ModelError::InvalidGrid(format!(
                    "values must be strictly increasing, got {v} after {prev} at index {i}"
                )));
            }
            values.push(DurationMs::raw(v));
            prev = v;
        }
        Ok(TsGrid { values })
    }

    /// `start, start+step, …` up to and including `stop` (within one part in
    /// 10⁹ of a step, so an endpoint that is an exact multiple is kept).
    pub fn from_range(start_ms: f64, step_ms: f64, stop_ms: f64) -> Result<Self, ModelError> {
        if !(step_ms > 0.0) || !step_ms.is_finite() {
            return Err(ModelError::InvalidGrid(format!(
                "step must be positive, got {step_ms}"
            )));
        }
        if !(start_ms > 0.0) || start_ms > stop_ms {
            return Err(ModelError::InvalidGrid(format!(
                "range [{start_ms}, {stop_ms}] must be positive and non-reversed"
            )));
        }
        let limit = stop_ms + step_ms * 1e-9;
        let mut values = Vec::new();
        for i in 0.. {
            let v = start_ms + (i as f64) * step_ms;
            if v > limit {
                break;
            }
            values.push(v);
        }
        // A final value within one part in 10⁹ of `stop` is the endpoint up
        // to accumulated rounding; pin it so the cap equals the request.
        if let Some(last) = values.last_mut() {
            if (*last - stop_ms).abs() <= step_ms * 1e-9 {
                *last = stop_ms;
            }
        }
        TsGrid::new(values)
    }

    pub fn values(&self) -> &[DurationMs] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> DurationMs {
        self.values[0]
    }

    pub fn last(&self) -> DurationMs {
        *self.values.last().expect("grid is nonempty")
    }

    /// Candidates `v` with `lo <= v <= hi`, possibly empty.
    pub fn bounded(&self, lo: DurationMs, hi: DurationMs) -> &[DurationMs] {
        let start = self.values.partition_point(|v| *v < lo);
        let end = self.values.partition_point(|v| *v <= hi);
        &self.values[start..end.max(start)]
    }

    /// Smallest candidate at or above `lo`.
    pub fn first_at_or_above(&self, lo: DurationMs) -> Option<DurationMs> {
        let idx = self.values.partition_point(|v| *v < lo);
        self.values.get(idx).copied()
    }

    /// Whether `ts` coincides with a grid candidate, up to a one-picosecond
    /// slack that absorbs decimal-literal rounding (e.g. `0.7` parsed from a
    /// config versus `0.05 + 13*0.05` computed here).
    pub fn contains(&self, ts: DurationMs) -> bool {
        let idx = self.values.partition_point(|v| v.ms() < ts.ms() - GRID_MEMBERSHIP_TOL_MS);
        self.values
            .get(idx)
            .is_some_and(|v| (v.ms() - ts.ms()).abs() <= GRID_MEMBERSHIP_TOL_MS)
    }
}

impl TryFrom<Vec<f64>> for TsGrid {
    type Error = ModelError;

    fn try_from(values_ms: Vec<f64>) -> Result<Self, ModelError> {
        TsGrid::new(values_ms)
    }
}

impl From<TsGrid> for Vec<f64> {
    fn from(grid: TsGrid) -> Vec<f64> {
        grid.values.iter().map(|v| v.ms()).collect()
    }
}

/// A policy plus the candidate set it draws from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub grid: TsGrid,
    /// Hard upper bound on any announced duration (radio/regulatory limit).
    pub ts_max: DurationMs,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, grid: TsGrid, ts_max: DurationMs) -> Result<Self, ModelError> {
        let config = PolicyConfig { kind, grid, ts_max };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.grid.last().ms() > self.ts_max.ms() + GRID_MEMBERSHIP_TOL_MS {
            return Err(ModelError::InvalidGrid(format!(
                "extends to {} ms, beyond the {} ms duration cap",
                self.grid.last().ms(),
                self.ts_max.ms()
            )));
        }
        match self.kind {
            PolicyKind::Fixed { ts_ms } => {
                if !self.grid.contains(ts_ms) {
                    return Err(ModelError::FixedTsOffGrid(ts_ms.ms()));
                }
            }
            PolicyKind::Dppdu { v } | PolicyKind::EadPpdu { v } => {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(ModelError::NonPositiveWeight(v));
                }
            }
            PolicyKind::ThroughputOptimal => {}
        }
        Ok(())
    }
}

// --- model operations -----------------------------------------------------

/// T_k: time needed to drain `queue_bits` at `rate_bps`, in milliseconds.
/// An empty queue needs no time regardless of rate validity concerns, but a
/// non-positive rate is rejected outright.
pub fn required_duration(queue_bits: f64, rate_bps: f64) -> Result<DurationMs, ModelError> {
    if !(rate_bps > 0.0) || !rate_bps.is_finite() {
        return Err(ModelError::NonPositiveRate(rate_bps));
    }
    if !queue_bits.is_finite() || queue_bits < 0.0 {
        return Err(ModelError::InvalidQueue(queue_bits));
    }
    Ok(DurationMs::raw(queue_bits / rate_bps * 1000.0))
}

/// One slot of queue dynamics: drain at the user's rate for `ts` if the
/// user's group was scheduled, clamp at zero, then add fresh arrivals.
/// Returns the bits actually served (never exceeding the prior backlog).
pub fn apply_queue_update(
    user: &mut UserState,
    ts: DurationMs,
    scheduled: bool,
    arrivals_bits: f64,
) -> f64 {
    debug_assert!(arrivals_bits >= 0.0 && arrivals_bits.is_finite());
    let served = if scheduled {
        user.queue_bits.min(ts.bits_at(user.rate_bps))
    } else {
        0.0
    };
    user.queue_bits = (user.queue_bits - served).max(0.0) + arrivals_bits;
    served
}

/// H_k: padding a user transmits when the announced duration outlasts its
/// data, `max(ts − t_k, 0)`.
pub fn padding_overhead(ts: DurationMs, t_k: DurationMs) -> DurationMs {
    ts.saturating_sub(t_k)
}

/// F_k: true when the announced duration lets the user drain its whole
/// backlog (`ts >= t_k`). An empty queue (`t_k = 0`) always counts.
pub fn fairness_indicator(ts: DurationMs, t_k: DurationMs) -> bool {
    ts >= t_k
}

/// E_k: energy spent transmitting for the whole announced duration, in
/// millijoules (`ms × W = mJ`).
pub fn slot_energy(ts: DurationMs, power_watts: f64) -> f64 {
    debug_assert!(power_watts > 0.0);
    ts.ms() * power_watts
}

/// D_tot: total delivered bits per second if the group transmits for `ts`,
/// `Σ_k min(Q_k, R_k·ts) / ts`. Zero duration is only meaningful when
/// nothing is backlogged.
pub fn total_throughput(demands: &[SlotDemand], ts: DurationMs) -> Result<f64, ModelError> {
    if ts.is_zero() {
        let backlog: f64 = demands.iter().map(|d| d.queue_bits).sum();
        if backlog > 0.0 {
            return Err(ModelError::ZeroDurationWithBacklog(backlog));
        }
        return Ok(0.0);
    }
    let ts_seconds = ts.ms() / 1000.0;
    let delivered: f64 = demands
        .iter()
        .map(|d| d.queue_bits.min(d.rate_bps * ts_seconds))
        .sum();
    Ok(delivered / ts_seconds)
}

// --- tests -----------------------------------------------------------------
