//! Seeded demand generation: what each user has to send when its group's
//! slot comes up.
//!
//! The primary mode draws a fresh required transmission duration per user
//! per scheduled slot and converts it to bits at a fixed reference rate.
//! By default each draw stands alone: whatever the previous slot left
//! unsent is superseded, so every slot's requirement is coverable by some
//! grid candidate. The drift policies depend on that: their queue weights
//! grow by at most the per-slot target, so a requirement that compounded
//! across slots would outrun the weights and become permanently
//! unservable. Opting into `carryover` stacks unserved backlog onto each
//! fresh draw for studying exactly that regime. The rate-set mode models
//! true queues (arrivals accumulate, service drains) for exercising the
//! queue dynamics directly.
//!
//! # Example
//!
//! ```
//! use ppdusim::traffic::{DemandSampler, DurationDistribution, TrafficModel};
//! use ppdusim::model::UserState;
//! use rand::SeedableRng;
//!
//! let model = TrafficModel::SampledDurations {
//!     per_user: vec![DurationDistribution::Deterministic { value_ms: 1.0 }],
//!     ref_rate_bps: 1e6,
//!     carryover: false,
//! };
//! let sampler = DemandSampler::new(&model).unwrap();
//! let mut users = vec![UserState::new(1e6, 0.65, 1.0, 0.31).unwrap()];
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let mut demands = Vec::new();
//! sampler.sample_slot_demands(&mut users, &mut rng, &mut demands);
//! assert_eq!(demands[0].required.ms(), 1.0);
//! ```

use crate::model::{SlotDemand, UserState};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the generator every run uses; recorded in run metadata so a
/// report pins down its entire random stream.
pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("gamma shape and scale must be positive and finite, got shape {shape}, scale {scale} ms")]
    InvalidGamma { shape: f64, scale: f64 },
    #[error("deterministic duration must be positive and finite, got {0} ms")]
    InvalidDeterministic(f64),
    #[error("mean durations must increase strictly with user index, got {later} ms after {earlier} ms")]
    NonIncreasingMeans { earlier: f64, later: f64 },
    #[error("traffic model describes {got} users, the scenario has {expected} per group")]
    WrongUserCount { expected: usize, got: usize },
    #[error("reference rate must be positive and finite, got {0} bps")]
    InvalidRefRate(f64),
    #[error("rate set must be nonempty with positive, finite rates")]
    InvalidRateSet,
    #[error("mean arrival size must be finite and non-negative, got {0} bits")]
    InvalidArrivalMean(f64),
}

// --- distributions ---------------------------------------------------------

/// Distribution of one user's fresh required duration, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DurationDistribution {
    /// Gamma(shape, scale); mean = shape × scale, coefficient of variation
    /// 1/√shape.
    Gamma { shape: f64, scale_ms: f64 },
    /// The zero-variance limit: every draw returns `value_ms`.
    Deterministic { value_ms: f64 },
}

impl DurationDistribution {
    /// Gamma with the given mean and shape (scale = mean/shape).
    pub fn gamma_with_mean(mean_ms: f64, shape: f64) -> Self {
        DurationDistribution::Gamma {
            shape,
            scale_ms: mean_ms / shape,
        }
    }

    pub fn mean_ms(&self) -> f64 {
        match *self {
            DurationDistribution::Gamma { shape, scale_ms } => shape * scale_ms,
            DurationDistribution::Deterministic { value_ms } => value_ms,
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        match *self {
            DurationDistribution::Gamma { shape, scale_ms } => {
                if !(shape > 0.0) || !shape.is_finite() || !(scale_ms > 0.0) || !scale_ms.is_finite()
                {
                    return Err(TrafficError::InvalidGamma {
                        shape,
                        scale: scale_ms,
                    });
                }
            }
            DurationDistribution::Deterministic { value_ms } => {
                if !(value_ms > 0.0) || !value_ms.is_finite() {
                    return Err(TrafficError::InvalidDeterministic(value_ms));
                }
            }
        }
        Ok(())
    }
}

// --- traffic models ----------------------------------------------------------

/// How demand materializes at a group's scheduled slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TrafficModel {
    /// Fresh demand arrives as a drawn duration converted to bits at a
    /// common reference rate. Mean durations must increase strictly with
    /// the user index. With `carryover` off (the default) each draw
    /// replaces whatever the previous slot left unserved; with it on,
    /// unserved bits stack onto the fresh draw.
    SampledDurations {
        per_user: Vec<DurationDistribution>,
        ref_rate_bps: f64,
        #[serde(default)]
        carryover: bool,
    },
    /// Fresh demand arrives as exponentially distributed bits per user, and
    /// each user's rate is redrawn uniformly from a shared set every slot.
    /// A zero mean disables arrivals for that user.
    RateSet {
        rates_bps: Vec<f64>,
        mean_arrival_bits: Vec<f64>,
    },
}

impl TrafficModel {
    pub fn num_users(&self) -> usize {
        match self {
            TrafficModel::SampledDurations { per_user, .. } => per_user.len(),
            TrafficModel::RateSet {
                mean_arrival_bits, ..
            } => mean_arrival_bits.len(),
        }
    }

    /// Mean fresh durations per user, when the model defines them.
    pub fn mean_durations_ms(&self) -> Option<Vec<f64>> {
        match self {
            TrafficModel::SampledDurations { per_user, .. } => {
                Some(per_user.iter().map(|d| d.mean_ms()).collect())
            }
            TrafficModel::RateSet { .. } => None,
        }
    }

    pub fn validate(&self, expected_users: usize) -> Result<(), TrafficError> {
        let got = self.num_users();
        if got != expected_users {
            return Err(TrafficError::WrongUserCount {
                expected: expected_users,
                got,
            });
        }
        match self {
            TrafficModel::SampledDurations {
                per_user,
                ref_rate_bps,
                carryover: _,
            } => {
                if !(*ref_rate_bps > 0.0) || !ref_rate_bps.is_finite() {
                    return Err(TrafficError::InvalidRefRate(*ref_rate_bps));
                }
                for dist in per_user {
                    dist.validate()?;
                }
                for pair in per_user.windows(2) {
                    let (earlier, later) = (pair[0].mean_ms(), pair[1].mean_ms());
                    if later <= earlier {
                        return Err(TrafficError::NonIncreasingMeans { earlier, later });
                    }
                }
            }
            TrafficModel::RateSet {
                rates_bps,
                mean_arrival_bits,
            } => {
                if rates_bps.is_empty() || rates_bps.iter().any(|r| !(*r > 0.0) || !r.is_finite())
                {
                    return Err(TrafficError::InvalidRateSet);
                }
                for &m in mean_arrival_bits {
                    if !m.is_finite() || m < 0.0 {
                        return Err(TrafficError::InvalidArrivalMean(m));
                    }
                }
            }
        }
        Ok(())
    }
}

// --- sampling ------------------------------------------------------------------

enum PreparedDuration {
    Gamma(Gamma<f64>),
    Fixed(f64),
}

impl PreparedDuration {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            // Clamp away underflow-to-zero draws; durations are strictly positive.
            PreparedDuration::Gamma(g) => g.sample(rng).max(f64::MIN_POSITIVE),
            PreparedDuration::Fixed(v) => *v,
        }
    }
}

enum Prepared {
    Durations {
        dists: Vec<PreparedDuration>,
        ref_rate_bps: f64,
        carryover: bool,
    },
    RateSet {
        rates_bps: Vec<f64>,
        arrivals: Vec<Option<Exp<f64>>>,
    },
}

/// A validated traffic model with its samplers built, owned by one run.
/// Sampling order is user order, so a seed fixes the whole demand stream.
pub struct DemandSampler {
    prepared: Prepared,
}

impl DemandSampler {
    pub fn new(model: &TrafficModel) -> Result<Self, TrafficError> {
        model.validate(model.num_users())?;
        let prepared = match model {
            TrafficModel::SampledDurations {
                per_user,
                ref_rate_bps,
                carryover,
            } => Prepared::Durations {
                dists: per_user
                    .iter()
                    .map(|d| match *d {
                        DurationDistribution::Gamma { shape, scale_ms } => {
                            Gamma::new(shape, scale_ms)
                                .map(PreparedDuration::Gamma)
                                .map_err(|_| TrafficError::InvalidGamma {
                                    shape,
                                    scale: scale_ms,
                                })
                        }
                        DurationDistribution::Deterministic { value_ms } => {
                            Ok(PreparedDuration::Fixed(value_ms))
                        }
                    })
                    .collect::<Result<_, _>>()?,
                ref_rate_bps: *ref_rate_bps,
                carryover: *carryover,
            },
            TrafficModel::RateSet {
                rates_bps,
                mean_arrival_bits,
            } => Prepared::RateSet {
                rates_bps: rates_bps.clone(),
                arrivals: mean_arrival_bits
                    .iter()
                    .map(|&m| {
                        if m == 0.0 {
                            Ok(None)
                        } else {
                            Exp::new(1.0 / m)
                                .map(Some)
                                .map_err(|_| TrafficError::InvalidArrivalMean(m))
                        }
                    })
                    .collect::<Result<_, _>>()?,
            },
        };
        Ok(DemandSampler { prepared })
    }

    pub fn num_users(&self) -> usize {
        match &self.prepared {
            Prepared::Durations { dists, .. } => dists.len(),
            Prepared::RateSet { arrivals, .. } => arrivals.len(),
        }
    }

    /// Injects one slot of fresh demand into `users` and writes the
    /// decision-time snapshot into `out`.
    pub fn sample_slot_demands(
        &self,
        users: &mut [UserState],
        rng: &mut impl Rng,
        out: &mut Vec<SlotDemand>,
    ) {
        debug_assert_eq!(users.len(), self.num_users());
        out.clear();
        match &self.prepared {
            Prepared::Durations {
                dists,
                ref_rate_bps,
                carryover,
            } => {
                for (user, dist) in users.iter_mut().zip(dists) {
                    let fresh_ms = dist.sample(rng);
                    let fresh_bits = fresh_ms * ref_rate_bps / 1000.0;
                    user.rate_bps = *ref_rate_bps;
                    user.queue_bits = if *carryover {
                        user.queue_bits + fresh_bits
                    } else {
                        fresh_bits
                    };
                    out.push(
                        SlotDemand::new(user.queue_bits, user.rate_bps)
                            .expect("rates and queues validated at construction"),
                    );
                }
            }
            Prepared::RateSet {
                rates_bps,
                arrivals,
            } => {
                for (user, arrival) in users.iter_mut().zip(arrivals) {
                    let rate = rates_bps[rng.gen_range(0..rates_bps.len())];
                    let fresh_bits = arrival.map_or(0.0, |a| a.sample(rng));
                    user.rate_bps = rate;
                    user.queue_bits += fresh_bits;
                    out.push(
                        SlotDemand::new(user.queue_bits, user.rate_bps)
                            .expect("rates and queues validated at construction"),
                    );
                }
            }
        }
    }
}

// --- tests -----------------------------------------------------------------
