//! Protocol-time accounting for the two frame-exchange shapes: a fixed
//! announced duration (trigger frame only) versus a negotiated one (trigger
//! frame, buffer-status report, and announced-duration frame).
//!
//! All values are microseconds. These costs are reported alongside the
//! padding metrics; they are never folded into them.
//!
//! # Example
//!
//! ```
//! use ppdusim::overhead::MacTimingConfig;
//!
//! let timing = MacTimingConfig::default();
//! assert_eq!(timing.trigger_frame_time(1).unwrap(), 58.6);
//! assert_eq!(timing.exchange_overhead_delta_us(), 158.2);
//! ```

use crate::model::{DurationMs, PolicyKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OverheadError {
    #[error("a frame exchange involves at least one user, got {0}")]
    NoUsers(usize),
    #[error("timing constant {name} must be positive, got {value} µs")]
    NonPositiveConstant { name: &'static str, value: f64 },
}

/// Which control-frame sequence wraps the data transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExchangeKind {
    /// Trigger frame announcing a pre-set duration, then the uplink data.
    FixedDuration,
    /// Buffer-status poll and report, duration announcement, then the data.
    NegotiatedDuration,
}

impl From<&PolicyKind> for ExchangeKind {
    fn from(kind: &PolicyKind) -> ExchangeKind {
        match kind {
            PolicyKind::Fixed { .. } => ExchangeKind::FixedDuration,
            // Every queue-aware policy needs the buffer-status round trip.
            _ => ExchangeKind::NegotiatedDuration,
        }
    }
}

/// Inter-frame spacings and control-frame sizes, in microseconds.
///
/// Defaults are the 802.11ax values: SIFS 16, PIFS 25, a 56 µs MAC+PHY
/// preamble per control frame, and 2.6 µs per addressed user. Override them
/// for other PHY generations; with non-default constants the documented
/// exact decimal identities below no longer apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MacTimingConfig {
    pub sifs_us: f64,
    pub pifs_us: f64,
    pub mac_phy_preamble_us: f64,
    pub per_user_info_us: f64,
}

impl Default for MacTimingConfig {
    fn default() -> Self {
        MacTimingConfig {
            sifs_us: 16.0,
            pifs_us: 25.0,
            mac_phy_preamble_us: 56.0,
            per_user_info_us: 2.6,
        }
    }
}

impl MacTimingConfig {
    pub fn validate(&self) -> Result<(), OverheadError> {
        let fields = [
            ("sifs_us", self.sifs_us),
            ("pifs_us", self.pifs_us),
            ("mac_phy_preamble_us", self.mac_phy_preamble_us),
            ("per_user_info_us", self.per_user_info_us),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(OverheadError::NonPositiveConstant { name, value });
            }
        }
        Ok(())
    }

    /// Airtime of a trigger frame addressing `num_users` stations:
    /// preamble plus one per-user info record each.
    pub fn trigger_frame_time(&self, num_users: usize) -> Result<f64, OverheadError> {
        if num_users == 0 {
            return Err(OverheadError::NoUsers(num_users));
        }
        Ok(self.mac_phy_preamble_us + self.per_user_info_us * num_users as f64)
    }

    /// Airtime of a buffer-status report; it carries a single info record.
    pub fn buffer_status_time(&self) -> f64 {
        self.mac_phy_preamble_us + self.per_user_info_us
    }

    /// Airtime of the frame announcing the chosen duration; same size as a
    /// buffer-status report.
    pub fn duration_announce_time(&self) -> f64 {
        self.mac_phy_preamble_us + self.per_user_info_us
    }

    /// Wall-clock time of one complete frame exchange around a data
    /// transmission of `ts`.
    ///
    /// Fixed: trigger frame, SIFS, data. Negotiated: buffer-status poll and
    /// report, the duration announcement, a trigger frame, the data, with
    /// two SIFS gaps and a PIFS.
    pub fn total_exchange_time(
        &self,
        kind: ExchangeKind,
        ts: DurationMs,
        num_users: usize,
    ) -> Result<f64, OverheadError> {
        let trigger = self.trigger_frame_time(num_users)?;
        let ts_us = ts.ms() * 1000.0;
        Ok(match kind {
            ExchangeKind::FixedDuration => ts_us + trigger + self.sifs_us,
            ExchangeKind::NegotiatedDuration => {
                ts_us
                    + trigger
                    + self.buffer_status_time()
                    + self.duration_announce_time()
                    + 2.0 * self.sifs_us
                    + self.pifs_us
            }
        })
    }

    /// Extra control-plane time a negotiated exchange costs over a fixed
    /// one: one SIFS, one PIFS, the buffer-status report, and the duration
    /// announcement. Independent of the data duration and the user count.
    ///
    /// The terms are summed in this exact order; with the default constants
    /// the partial sums stay on one-decimal values, so the result is the
    /// decimal 158.2 with no rounding residue. Subtracting two
    /// `total_exchange_time` values instead leaves a last-ulp residue.
    pub fn exchange_overhead_delta_us(&self) -> f64 {
        self.sifs_us + self.pifs_us + self.buffer_status_time() + self.duration_announce_time()
    }

    /// Whether negotiating the duration pays for itself: true when the
    /// airtime saved relative to a fixed duration `ts_fixed` exceeds the
    /// extra control-plane time.
    pub fn dppdu_breakeven(&self, ts_fixed: DurationMs, t_min: DurationMs) -> bool {
        let savings_us = (ts_fixed.ms() - t_min.ms()) * 1000.0;
        savings_us > self.exchange_overhead_delta_us()
    }
}

// --- tests -----------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: f64) -> DurationMs {
        DurationMs::from_ms(v).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn trigger_frame_values_are_exact() {
        let t = MacTimingConfig::default();
        assert_eq!(t.trigger_frame_time(1).unwrap(), 58.6);
        assert_eq!(t.trigger_frame_time(5).unwrap(), 69.0);
        assert_eq!(t.trigger_frame_time(0), Err(OverheadError::NoUsers(0)));
    }

    #[test]
    fn trigger_frame_is_affine_with_per_user_slope() {
        let t = MacTimingConfig::default();
        for n in 1..200 {
            let step = t.trigger_frame_time(n + 1).unwrap() - t.trigger_frame_time(n).unwrap();
            assert!(close(step, 2.6), "slope {step} at {n} users");
        }
    }

    #[test]
    fn negotiated_exchange_matches_hand_sum() {
        let t = MacTimingConfig::default();
        let total = t
            .total_exchange_time(ExchangeKind::NegotiatedDuration, ms(0.59), 5)
            .unwrap();
        // 590 + 69 + 58.6 + 58.6 + 32 + 25
        assert!(close(total, 833.2), "got {total}");
    }

    #[test]
    fn fixed_exchange_matches_hand_sum() {
        let t = MacTimingConfig::default();
        let total = t
            .total_exchange_time(ExchangeKind::FixedDuration, ms(0.69), 5)
            .unwrap();
        // 690 + 69 + 16
        assert!(close(total, 775.0), "got {total}");
    }

    #[test]
    fn zero_duration_leaves_the_protocol_floor() {
        let t = MacTimingConfig::default();
        let fixed = t
            .total_exchange_time(ExchangeKind::FixedDuration, DurationMs::ZERO, 1)
            .unwrap();
        assert!(close(fixed, 58.6 + 16.0));
        let negotiated = t
            .total_exchange_time(ExchangeKind::NegotiatedDuration, DurationMs::ZERO, 1)
            .unwrap();
        assert!(close(negotiated, 232.8), "got {negotiated}");
    }

    #[test]
    fn overhead_delta_is_exactly_158_2() {
        assert_eq!(MacTimingConfig::default().exchange_overhead_delta_us(), 158.2);
    }

    #[test]
    fn exchange_totals_differ_by_the_delta() {
        let t = MacTimingConfig::default();
        for &ts in &[0.0, 0.05, 0.59, 0.69, 1.0, 5.484, 12.0] {
            for n in [1usize, 5, 9, 74] {
                let d = t
                    .total_exchange_time(ExchangeKind::NegotiatedDuration, ms(ts), n)
                    .unwrap();
                let f = t
                    .total_exchange_time(ExchangeKind::FixedDuration, ms(ts), n)
                    .unwrap();
                assert!(
                    close(d - f, t.exchange_overhead_delta_us()),
                    "ts={ts} n={n}: {d} - {f}"
                );
            }
        }
    }

    #[test]
    fn breakeven_needs_savings_beyond_the_delta() {
        let t = MacTimingConfig::default();
        assert!(t.dppdu_breakeven(ms(0.69), ms(0.5)));
        assert!(!t.dppdu_breakeven(ms(0.69), ms(0.69)));
        assert!(!t.dppdu_breakeven(ms(1.0), ms(0.9)));
    }

    #[test]
    fn exchange_kind_tracks_policy_awareness() {
        let fixed = PolicyKind::Fixed { ts_ms: ms(1.0) };
        assert_eq!(ExchangeKind::from(&fixed), ExchangeKind::FixedDuration);
        for kind in [
            PolicyKind::ThroughputOptimal,
            PolicyKind::Dppdu { v: 1.0 },
            PolicyKind::EadPpdu { v: 1.0 },
        ] {
            assert_eq!(ExchangeKind::from(&kind), ExchangeKind::NegotiatedDuration);
        }
    }

    #[test]
    fn validation_rejects_nonpositive_constants() {
        let mut t = MacTimingConfig::default();
        assert!(t.validate().is_ok());
        t.sifs_us = 0.0;
        assert_eq!(
            t.validate(),
            Err(OverheadError::NonPositiveConstant {
                name: "sifs_us",
                value: 0.0
            })
        );
    }
}
