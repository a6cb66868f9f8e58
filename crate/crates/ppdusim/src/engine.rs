//! Slot-synchronous round-robin simulation: one group transmits per slot,
//! cycling through all groups, while per-group metrics accumulate.
//!
//! A run is strictly sequential (slot t+1 depends on slot t), but distinct
//! runs share nothing mutable, so sweeps and searches fan their runs out
//! across threads.
//!
//! Reported averages cover the second half of each group's scheduled slots,
//! discarding the transient while virtual queues find their operating
//! point. Quarter-by-quarter virtual-queue means are kept alongside so
//! stability (bounded backlog growth) is observable directly.
//!
//! # Example
//!
//! ```
//! use ppdusim::config::ExperimentConfig;
//! use ppdusim::engine;
//! use ppdusim::model::PolicyKind;
//!
//! let mut config = ExperimentConfig::reference_scenario(PolicyKind::Dppdu { v: 500.0 });
//! config.horizon_slots = 2_000; // keep the doctest fast
//! let report = engine::run(&config).unwrap();
//! assert_eq!(report.groups.len(), 20);
//! assert_eq!(report.headline().scheduled_slots, 100);
//! ```

use crate::config::{ConfigError, ExperimentConfig};
use crate::model::{
    DurationMs, GroupState, PerUserOutcome, PolicyKind, SlotDecision, SlotDemand, UserState,
};
use crate::overhead::ExchangeKind;
use crate::policies;
use crate::traffic::{DemandSampler, TrafficError, RNG_NAME};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("traffic: {0}")]
    Traffic(#[from] TrafficError),
    #[error("weight sweep requires a weighted policy, got \"{0}\"")]
    UnweightedSweep(&'static str),
    #[error("model: {0}")]
    Model(#[from] crate::model::ModelError),
}

// --- reports -----------------------------------------------------------------

/// Provenance of a run: everything needed to reproduce or audit it.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub policy: String,
    pub v: Option<f64>,
    pub fixed_ts_ms: Option<f64>,
    pub seed: u64,
    pub rng: String,
    pub horizon_slots: u64,
    pub num_groups: usize,
    pub users_per_group: usize,
    /// SHA-256 of the resolved config's canonical JSON form.
    pub config_digest: String,
    /// Additive constants of the performance bounds, for diagnosis.
    pub drift_bound_b1: f64,
    pub drift_bound_b2: f64,
    /// Protocol time per slot beyond the data duration, in µs, for the
    /// exchange shape this policy needs.
    pub per_slot_overhead_us: f64,
    pub version: String,
}

/// Time-average metrics of one group, over the second half of its
/// scheduled slots (or all of them when the run is too short to split).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub group_id: usize,
    pub scheduled_slots: u64,
    /// Slots inside the averaging window.
    pub averaging_slots: u64,
    pub avg_ts_ms: f64,
    pub avg_h_tot_ms: f64,
    /// Mean number of users whose queue a slot empties.
    pub avg_s_tot: f64,
    /// Per-user emptying frequency (length K).
    pub avg_f: Vec<f64>,
    /// Per-user mean slot energy in mJ (length K).
    pub avg_e_mj: Vec<f64>,
    /// Whether every user meets its fairness target in this window.
    pub fairness_satisfied: bool,
    /// Whether every user stays within its energy budget in this window.
    pub energy_satisfied: bool,
    pub quarter_slots: [u64; 4],
    /// Mean of Σ_k X_k per quarter of the group's scheduled slots.
    pub quarter_mean_fairness_vq_sum: [f64; 4],
    /// Mean of Σ_k Y_k per quarter.
    pub quarter_mean_energy_vq_sum: [f64; 4],
}

/// One sampled point of group 1's trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    /// Global slot index.
    pub slot: u64,
    /// Index among the group's own scheduled slots.
    pub group_slot: u64,
    pub ts_ms: f64,
    pub fairness_vq_sum: f64,
    pub energy_vq_sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub meta: RunMeta,
    pub groups: Vec<GroupMetrics>,
    /// Present only when tracing was enabled.
    pub trace: Vec<TracePoint>,
}

impl RunReport {
    /// Group 1's metrics; with identical groups it stands for all of them.
    pub fn headline(&self) -> &GroupMetrics {
        &self.groups[0]
    }
}

// --- metrics accumulation -------------------------------------------------------

#[derive(Debug, Clone, Default)]
struct QuarterAcc {
    slots: u64,
    ts_ms: f64,
    h_tot_ms: f64,
    s_tot: f64,
    f: Vec<f64>,
    e_mj: Vec<f64>,
    fairness_vq_sum: f64,
    energy_vq_sum: f64,
}

struct MetricsAcc {
    planned: u64,
    seen: u64,
    quarters: [QuarterAcc; 4],
}

impl MetricsAcc {
    fn new(users: usize, planned: u64) -> Self {
        let quarter = QuarterAcc {
            f: vec![0.0; users],
            e_mj: vec![0.0; users],
            ..QuarterAcc::default()
        };
        MetricsAcc {
            planned,
            seen: 0,
            quarters: std::array::from_fn(|_| quarter.clone()),
        }
    }

    fn record(&mut self, decision: &SlotDecision, fairness_vq_sum: f64, energy_vq_sum: f64) {
        debug_assert!(self.seen < self.planned);
        let q = ((self.seen * 4) / self.planned.max(1)).min(3) as usize;
        let quarter = &mut self.quarters[q];
        quarter.slots += 1;
        quarter.ts_ms += decision.ts.ms();
        quarter.h_tot_ms += decision.total_padding_ms();
        quarter.s_tot += decision.total_emptied() as f64;
        for (k, outcome) in decision.per_user.iter().enumerate() {
            if outcome.emptied {
                quarter.f[k] += 1.0;
            }
            quarter.e_mj[k] += outcome.energy_mj;
        }
        quarter.fairness_vq_sum += fairness_vq_sum;
        quarter.energy_vq_sum += energy_vq_sum;
        self.seen += 1;
    }

    fn finish(
        &self,
        group_id: usize,
        fairness_targets: &[f64],
        energy_budgets_mj: &[f64],
    ) -> GroupMetrics {
        let users = fairness_targets.len();
        // Second half of the horizon; everything when that half is empty.
        let window: &[QuarterAcc] = if self.quarters[2].slots + self.quarters[3].slots > 0 {
            &self.quarters[2..4]
        } else {
            &self.quarters[..]
        };
        let slots: u64 = window.iter().map(|q| q.slots).sum();
        let denom = slots.max(1) as f64;
        let sum = |pick: fn(&QuarterAcc) -> f64| window.iter().map(pick).sum::<f64>() / denom;
        let avg_f: Vec<f64> = (0..users)
            .map(|k| window.iter().map(|q| q.f[k]).sum::<f64>() / denom)
            .collect();
        let avg_e_mj: Vec<f64> = (0..users)
            .map(|k| window.iter().map(|q| q.e_mj[k]).sum::<f64>() / denom)
            .collect();
        let fairness_satisfied = avg_f
            .iter()
            .zip(fairness_targets)
            .all(|(f, c)| f >= c);
        let energy_satisfied = avg_e_mj
            .iter()
            .zip(energy_budgets_mj)
            .all(|(e, budget)| e <= budget);
        let quarter_mean = |pick: fn(&QuarterAcc) -> f64| {
            std::array::from_fn(|i| {
                let q = &self.quarters[i];
                if q.slots == 0 {
                    0.0
                } else {
                    pick(q) / q.slots as f64
                }
            })
        };
        GroupMetrics {
            group_id,
            scheduled_slots: self.seen,
            averaging_slots: slots,
            avg_ts_ms: sum(|q| q.ts_ms),
            avg_h_tot_ms: sum(|q| q.h_tot_ms),
            avg_s_tot: sum(|q| q.s_tot),
            avg_f,
            avg_e_mj,
            fairness_satisfied,
            energy_satisfied,
            quarter_slots: std::array::from_fn(|i| self.quarters[i].slots),
            quarter_mean_fairness_vq_sum: quarter_mean(|q| q.fairness_vq_sum),
            quarter_mean_energy_vq_sum: quarter_mean(|q| q.energy_vq_sum),
        }
    }
}

// --- slot execution ---------------------------------------------------------------

/// Applies a chosen duration to the scheduled group: serves queues and
/// derives each user's padding, emptying flag, and energy for this slot.
pub fn execute_slot(
    users: &mut [UserState],
    demands: &[SlotDemand],
    ts: DurationMs,
) -> SlotDecision {
    debug_assert_eq!(users.len(), demands.len());
    let per_user = users
        .iter_mut()
        .zip(demands)
        .map(|(user, demand)| {
            let outcome = PerUserOutcome {
                padding: crate::model::padding_overhead(ts, demand.required),
                emptied: crate::model::fairness_indicator(ts, demand.required),
                // An idle slot (ts = 0) carries no frame exchange and costs
                // no energy; the expression covers that case by linearity.
                energy_mj: crate::model::slot_energy(ts, user.tx_power_watts),
                served_bits: 0.0,
            };
            let served = crate::model::apply_queue_update(user, ts, true, 0.0);
            PerUserOutcome {
                served_bits: served,
                ..outcome
            }
        })
        .collect();
    SlotDecision { ts, per_user }
}

// --- single run ----------------------------------------------------------------------

/// Simulates `config.horizon_slots` scheduling slots and reports per-group
/// time averages. Infeasible constraint targets are not rejected up front;
/// they surface as unsatisfied constraint flags in the report.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, SimError> {
    config.validate()?;
    let sampler = DemandSampler::new(&config.traffic)?;
    let l = config.scenario.num_groups;
    let k = config.scenario.users_per_group;
    let horizon = config.horizon_slots;

    let mut groups: Vec<GroupState> = (0..l)
        .map(|g| {
            let users = (0..k)
                .map(|i| {
                    UserState::new(
                        config.initial_rate_bps(),
                        config.fairness_targets[i],
                        config.energy_budgets_mj[i],
                        config.tx_power_watts,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroupState::new(g + 1, users))
        })
        .collect::<Result<_, SimError>>()?;

    let mut accs: Vec<MetricsAcc> = (0..l)
        .map(|g| {
            let extra = u64::from((g as u64) < horizon % l as u64);
            MetricsAcc::new(k, horizon / l as u64 + extra)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut demands: Vec<SlotDemand> = Vec::with_capacity(k);
    let mut trace = Vec::new();

    for t in 0..horizon {
        let g = (t % l as u64) as usize;
        let group = &mut groups[g];
        sampler.sample_slot_demands(&mut group.users, &mut rng, &mut demands);
        let ts = match config.policy.kind {
            PolicyKind::Fixed { ts_ms } => ts_ms,
            PolicyKind::ThroughputOptimal => policies::throughput_optimal_ts(&demands),
            PolicyKind::Dppdu { v } => {
                policies::dppdu_choose_ts(&demands, &group.users, v, &config.policy)
            }
            PolicyKind::EadPpdu { v } => {
                policies::eadppdu_choose_ts(&demands, &group.users, v, &config.policy)
            }
        };
        let decision = execute_slot(&mut group.users, &demands, ts);
        policies::update_fairness_vqs(&mut group.users, &decision.per_user);
        policies::update_energy_vqs(&mut group.users, &decision.per_user);

        let fairness_vq_sum: f64 = group.users.iter().map(|u| u.fairness_vq).sum();
        let energy_vq_sum: f64 = group.users.iter().map(|u| u.energy_vq).sum();
        if g == 0 {
            if let Some(stride) = config.trace_stride {
                let group_slot = accs[0].seen;
                if group_slot % stride == 0 {
                    trace.push(TracePoint {
                        slot: t,
                        group_slot,
                        ts_ms: ts.ms(),
                        fairness_vq_sum,
                        energy_vq_sum,
                    });
                }
            }
        }
        accs[g].record(&decision, fairness_vq_sum, energy_vq_sum);
    }

    let groups = accs
        .iter()
        .enumerate()
        .map(|(g, acc)| acc.finish(g + 1, &config.fairness_targets, &config.energy_budgets_mj))
        .collect();
    Ok(RunReport {
        meta: run_meta(config),
        groups,
        trace,
    })
}

fn run_meta(config: &ExperimentConfig) -> RunMeta {
    let bounds = policies::drift_bound_constants(
        &config.fairness_targets,
        &config.energy_budgets_mj,
        config.policy.ts_max,
        config.tx_power_watts,
    );
    let exchange = ExchangeKind::from(&config.policy.kind);
    let per_slot_overhead_us = config
        .timing
        .total_exchange_time(exchange, DurationMs::ZERO, config.scenario.users_per_group)
        .expect("group size validated nonzero");
    let fixed_ts_ms = match config.policy.kind {
        PolicyKind::Fixed { ts_ms } => Some(ts_ms.ms()),
        _ => None,
    };
    RunMeta {
        policy: config.policy.kind.label().to_string(),
        v: config.policy.kind.v(),
        fixed_ts_ms,
        seed: config.seed,
        rng: RNG_NAME.to_string(),
        horizon_slots: config.horizon_slots,
        num_groups: config.scenario.num_groups,
        users_per_group: config.scenario.users_per_group,
        config_digest: config.digest(),
        drift_bound_b1: bounds.b1,
        drift_bound_b2: bounds.b2,
        per_slot_overhead_us,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

// --- sweeps ---------------------------------------------------------------------------

/// Runs the configured weighted policy once per value of `v`, all from the
/// same seed, so every point sees identical traffic. Order follows
/// `v_values`.
pub fn v_sweep(config: &ExperimentConfig, v_values: &[f64]) -> Result<Vec<RunReport>, SimError> {
    if config.policy.kind.with_v(1.0).is_none() {
        return Err(SimError::UnweightedSweep(config.policy.kind.label()));
    }
    v_values
        .par_iter()
        .map(|&v| {
            let mut point = config.clone();
            point.policy.kind = config
                .policy
                .kind
                .with_v(v)
                .expect("weighted kind checked above");
            run(&point)
        })
        .collect()
}

// --- hypothetical fixed-duration search ---------------------------------------------------

/// Which long-run constraint set a search enforces, and thereby which
/// objective it optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintProblem {
    /// Minimize average total padding subject to every fairness target.
    Padding,
    /// Maximize average emptied queues subject to every energy budget.
    Energy,
}

/// One grid candidate's outcome under the fixed policy.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateOutcome {
    pub ts_ms: f64,
    pub feasible: bool,
    pub metrics: GroupMetrics,
}

/// Closest-to-feasible candidate when nothing qualifies.
#[derive(Debug, Clone, Serialize)]
pub struct SearchDiagnostic {
    pub nearest_ts_ms: f64,
    /// Worst constraint shortfall at that candidate (target minus achieved
    /// frequency, or energy overrun in mJ).
    pub worst_violation: f64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub problem: ConstraintProblem,
    /// The winning candidate, when any candidate is feasible.
    pub best: Option<CandidateOutcome>,
    /// Every candidate in grid order.
    pub candidates: Vec<CandidateOutcome>,
    pub diagnostic: Option<SearchDiagnostic>,
}

/// Exhaustive offline search for the best fixed duration: one full run per
/// grid candidate under identical seeds and traffic, judged on group 1's
/// converged averages. The winner is the feasible candidate with the best
/// objective; ties go to the smaller duration.
pub fn hypothetical_fppdu_search(
    config: &ExperimentConfig,
    problem: ConstraintProblem,
) -> Result<SearchReport, SimError> {
    let grid = config.policy.grid.clone();
    let candidates: Vec<CandidateOutcome> = grid
        .values()
        .par_iter()
        .map(|&ts| {
            let mut candidate = config.clone();
            candidate.policy.kind = PolicyKind::Fixed { ts_ms: ts };
            candidate.trace_stride = None;
            let report = run(&candidate)?;
            let metrics = report.headline().clone();
            let feasible = match problem {
                ConstraintProblem::Padding => metrics.fairness_satisfied,
                ConstraintProblem::Energy => metrics.energy_satisfied,
            };
            Ok(CandidateOutcome {
                ts_ms: ts.ms(),
                feasible,
                metrics,
            })
        })
        .collect::<Result<_, SimError>>()?;

    let best = candidates
        .iter()
        .filter(|c| c.feasible)
        .fold(None::<&CandidateOutcome>, |best, c| match best {
            // Strict improvement keeps the earlier (smaller) duration on ties.
            None => Some(c),
            Some(b) => {
                let better = match problem {
                    ConstraintProblem::Padding => c.metrics.avg_h_tot_ms < b.metrics.avg_h_tot_ms,
                    ConstraintProblem::Energy => c.metrics.avg_s_tot > b.metrics.avg_s_tot,
                };
                Some(if better { c } else { b })
            }
        })
        .cloned();

    let diagnostic = if best.is_none() {
        let violation = |c: &CandidateOutcome| match problem {
            ConstraintProblem::Padding => c
                .metrics
                .avg_f
                .iter()
                .zip(&config.fairness_targets)
                .map(|(f, c_k)| c_k - f)
                .fold(f64::NEG_INFINITY, f64::max),
            ConstraintProblem::Energy => c
                .metrics
                .avg_e_mj
                .iter()
                .zip(&config.energy_budgets_mj)
                .map(|(e, budget)| e - budget)
                .fold(f64::NEG_INFINITY, f64::max),
        };
        candidates
            .iter()
            .map(|c| (c, violation(c)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, worst)| SearchDiagnostic {
                nearest_ts_ms: c.ts_ms,
                worst_violation: worst,
                message: match problem {
                    ConstraintProblem::Padding => format!(
                        "no candidate satisfies every fairness target; {} ms comes closest, \
                         short by {worst:.4} in emptying frequency",
                        c.ts_ms
                    ),
                    ConstraintProblem::Energy => format!(
                        "no candidate satisfies every energy budget; {} ms comes closest, \
                         over by {worst:.4} mJ",
                        c.ts_ms
                    ),
                },
            })
    } else {
        None
    };

    Ok(SearchReport {
        problem,
        best,
        candidates,
        diagnostic,
    })
}

// --- tests -----------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TsGrid;
    use crate::traffic::{DurationDistribution, TrafficModel};

    /// Single-group scenario with deterministic demand and a small grid.
    fn tiny_config(kind: PolicyKind, users: usize, horizon: u64) -> ExperimentConfig {
        let means: Vec<f64> = (1..=users).map(|i| i as f64).collect();
        let grid = TsGrid::new(vec![0.5, 0.9, 1.0, 1.1, 2.0, 3.0, 5.0]).unwrap();
        let ts_max = grid.last();
        ExperimentConfig {
            scenario: crate::config::Scenario {
                num_users: users,
                num_groups: 1,
                users_per_group: users,
            },
            traffic: TrafficModel::SampledDurations {
                per_user: means
                    .iter()
                    .map(|&m| DurationDistribution::Deterministic { value_ms: m })
                    .collect(),
                ref_rate_bps: 1e6,
                carryover: false,
            },
            policy: PolicyConfig { kind, grid, ts_max },
            fairness_targets: vec![0.65; users],
            energy_budgets_mj: vec![1.0; users],
            tx_power_watts: 0.31,
            timing: Default::default(),
            horizon_slots: horizon,
            seed: 9,
            trace_stride: None,
            out_dir: None,
        }
    }

    use crate::model::PolicyConfig;

    #[test]
    fn exact_fit_produces_full_fairness_and_no_padding() {
        let ts = DurationMs::from_ms(1.0).unwrap();
        let config = tiny_config(PolicyKind::Fixed { ts_ms: ts }, 1, 100);
        let report = run(&config).unwrap();
        let headline = report.headline();
        assert_eq!(headline.scheduled_slots, 100);
        assert_eq!(headline.avg_f, vec![1.0]);
        assert_eq!(headline.avg_h_tot_ms, 0.0);
        assert!(headline.fairness_satisfied);
    }

    #[test]
    fn oversized_fixed_duration_pads_and_spends_the_forced_energy() {
        let ts = DurationMs::from_ms(2.0).unwrap();
        let config = tiny_config(PolicyKind::Fixed { ts_ms: ts }, 1, 100);
        let report = run(&config).unwrap();
        let headline = report.headline();
        assert!((headline.avg_h_tot_ms - 1.0).abs() < 1e-12);
        assert!((headline.avg_e_mj[0] - 0.62).abs() < 1e-12);
        assert!((headline.avg_ts_ms - 2.0).abs() < 1e-12);
    }

    #[test]
    fn throughput_optimal_never_pads() {
        let config = tiny_config(PolicyKind::ThroughputOptimal, 3, 300);
        let report = run(&config).unwrap();
        assert_eq!(report.headline().avg_h_tot_ms, 0.0);
        // Only the shortest-demand user empties each slot, and backlogs of
        // the others grow, so fairness cannot be satisfied for all three.
        assert!(!report.headline().fairness_satisfied);
    }

    #[test]
    fn round_robin_splits_the_horizon_evenly() {
        let mut config = tiny_config(PolicyKind::ThroughputOptimal, 1, 7);
        config.scenario.num_groups = 3;
        config.scenario.num_users = 3;
        let report = run(&config).unwrap();
        let counts: Vec<u64> = report.groups.iter().map(|g| g.scheduled_slots).collect();
        assert_eq!(counts, vec![3, 2, 2]);
        assert_eq!(report.headline().quarter_slots.iter().sum::<u64>(), 3);
    }

    #[test]
    fn identical_groups_report_statistically_equal_metrics() {
        let mut config =
            ExperimentConfig::reference_scenario(PolicyKind::Dppdu { v: 500.0 });
        config.horizon_slots = 20 * 20_000;
        let report = run(&config).unwrap();
        assert_eq!(report.groups.len(), 20);
        let h: Vec<f64> = report.groups.iter().map(|g| g.avg_h_tot_ms).collect();
        let s: Vec<f64> = report.groups.iter().map(|g| g.avg_s_tot).collect();
        for series in [h, s] {
            let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(
                (hi - lo) / hi < 0.05,
                "group spread too wide: {lo}..{hi}"
            );
        }
    }

    #[test]
    fn reports_are_deterministic_given_config_and_seed() {
        let mut config = ExperimentConfig::reference_scenario(PolicyKind::Dppdu { v: 100.0 });
        config.horizon_slots = 20 * 500;
        config.trace_stride = Some(10);
        let a = serde_json::to_string(&run(&config).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&config).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_respects_the_stride() {
        let mut config = tiny_config(PolicyKind::ThroughputOptimal, 1, 100);
        config.trace_stride = Some(10);
        let report = run(&config).unwrap();
        assert_eq!(report.trace.len(), 10);
        assert!(report.trace.iter().all(|p| p.group_slot % 10 == 0));
    }

    #[test]
    fn sweep_needs_a_weighted_policy() {
        let config = tiny_config(PolicyKind::ThroughputOptimal, 1, 10);
        assert!(matches!(
            v_sweep(&config, &[1.0, 2.0]),
            Err(SimError::UnweightedSweep("throughput-optimal"))
        ));
    }

    #[test]
    fn sweep_points_follow_the_requested_order_and_are_reproducible() {
        let mut config = tiny_config(PolicyKind::Dppdu { v: 1.0 }, 2, 200);
        config.seed = 4;
        let sweep = v_sweep(&config, &[100.0, 10.0, 100.0]).unwrap();
        assert_eq!(sweep.len(), 3);
        assert_eq!(sweep[0].meta.v, Some(100.0));
        assert_eq!(sweep[1].meta.v, Some(10.0));
        let a = serde_json::to_string(&sweep[0]).unwrap();
        let c = serde_json::to_string(&sweep[2]).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn search_on_deterministic_demand_is_exact() {
        // Single user needing exactly 1 ms: the smallest candidate at or
        // above 1 ms wins, and its padding is the forced difference.
        let config = tiny_config(PolicyKind::ThroughputOptimal, 1, 100);
        let report = hypothetical_fppdu_search(&config, ConstraintProblem::Padding).unwrap();
        let best = report.best.expect("feasible candidates exist");
        assert_eq!(best.ts_ms, 1.0);
        assert_eq!(best.metrics.avg_h_tot_ms, 0.0);
        assert_eq!(report.candidates.len(), 7);
        assert!(report.diagnostic.is_none());
    }

    #[test]
    fn search_reports_the_nearest_miss_when_infeasible() {
        let mut config = tiny_config(PolicyKind::ThroughputOptimal, 1, 100);
        config.policy.grid = TsGrid::new(vec![0.5]).unwrap();
        config.policy.ts_max = config.policy.grid.last();
        let report = hypothetical_fppdu_search(&config, ConstraintProblem::Padding).unwrap();
        assert!(report.best.is_none());
        let diagnostic = report.diagnostic.expect("diagnostic expected");
        assert_eq!(diagnostic.nearest_ts_ms, 0.5);
        assert!((diagnostic.worst_violation - 0.65).abs() < 1e-12);
    }

    #[test]
    fn search_with_one_feasible_candidate_returns_it() {
        let mut config = tiny_config(PolicyKind::ThroughputOptimal, 1, 100);
        config.policy.grid = TsGrid::new(vec![2.5]).unwrap();
        config.policy.ts_max = config.policy.grid.last();
        let report = hypothetical_fppdu_search(&config, ConstraintProblem::Padding).unwrap();
        assert_eq!(report.best.unwrap().ts_ms, 2.5);
    }

    #[test]
    fn energy_search_prefers_more_emptying_within_budget() {
        // Budget allows 1.0 mJ ≈ 3.22 ms at 0.31 W; 3 ms empties every
        // queue of the two users (1 and 2 ms) and stays within budget.
        let config = tiny_config(PolicyKind::ThroughputOptimal, 2, 100);
        let report = hypothetical_fppdu_search(&config, ConstraintProblem::Energy).unwrap();
        let best = report.best.expect("feasible candidates exist");
        assert_eq!(best.ts_ms, 2.0);
        assert!((best.metrics.avg_s_tot - 2.0).abs() < 1e-12);
    }

    #[test]
    fn meta_records_provenance() {
        let config = tiny_config(PolicyKind::Dppdu { v: 7.0 }, 1, 10);
        let report = run(&config).unwrap();
        assert_eq!(report.meta.policy, "dppdu");
        assert_eq!(report.meta.v, Some(7.0));
        assert_eq!(report.meta.rng, "chacha8");
        assert_eq!(report.meta.config_digest.len(), 64);
        assert_eq!(report.meta.config_digest, config.digest());
        assert!(report.meta.per_slot_overhead_us > 0.0);
    }
}
