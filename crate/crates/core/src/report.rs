//! Falsification reports.
//!
//! A report with no witnesses means that no violation was found among the
//! sampled points. It is not a proof.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    L1,
    L2,
    Decrease,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::A1 => "A1",
            Condition::A2 => "A2",
            Condition::A3 => "A3",
            Condition::A4 => "A4",
            Condition::A5 => "A5",
            Condition::A6 => "A6",
            Condition::L1 => "L1",
            Condition::L2 => "L2",
            Condition::Decrease => "decrease",
        };
        f.write_str(s)
    }
}

/// A sampled point where `lhs ≤ rhs` failed beyond tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative for a violation.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub condition: Condition,
    pub witnesses: Vec<Witness>,
    pub samples_tested: usize,
    /// Number of violations, including any beyond the stored witnesses.
    pub violations: usize,
    /// Smallest `rhs + tol - lhs` over all samples; negative exactly when
    /// some sample is a violation.
    pub worst_slack: f64,
}

impl ViolationReport {
    pub const MAX_WITNESSES: usize = 1000;

    pub fn new(condition: Condition) -> Self {
        ViolationReport {
            condition,
            witnesses: Vec::new(),
            samples_tested: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
        }
    }

    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }

    /// Records one `lhs ≤ rhs` check with tolerance `1e-9 (1 + |rhs|)`.
    pub fn record(&mut self, point: impl FnOnce() -> Vec<f64>, lhs: f64, rhs: f64) {
        self.record_with_tol(point, lhs, rhs, default_tol(rhs));
    }

    pub fn record_with_tol(
        &mut self,
        point: impl FnOnce() -> Vec<f64>,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) {
        self.samples_tested += 1;
        let slack = rhs - lhs;
        let slack = if slack.is_nan() {
            f64::NEG_INFINITY
        } else {
            slack
        };
        self.worst_slack = self.worst_slack.min(slack + tol);
        if slack < -tol {
            self.violations += 1;
            if self.witnesses.len() < Self::MAX_WITNESSES {
                self.witnesses.push(Witness {
                    point: point(),
                    lhs,
                    rhs,
                    slack,
                });
            }
        }
    }

    /// Concatenates `other` into `self`; associative, so chunked parallel
    /// checks merged in order give the same report as a sequential pass.
    pub fn merge(&mut self, other: ViolationReport) {
        debug_assert_eq!(self.condition, other.condition);
        self.samples_tested += other.samples_tested;
        self.violations += other.violations;
        self.worst_slack = self.worst_slack.min(other.worst_slack);
        let room = Self::MAX_WITNESSES.saturating_sub(self.witnesses.len());
        self.witnesses
            .extend(other.witnesses.into_iter().take(room));
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} violations / {} samples (worst slack {:.3e})",
            self.condition, self.violations, self.samples_tested, self.worst_slack
        )
    }
}

pub fn default_tol(rhs: f64) -> f64 {
    1e-9 * (1.0 + rhs.abs())
}

/// Merges per-chunk reports in order.
pub fn merge_all(
    condition: Condition,
    parts: impl IntoIterator<Item = ViolationReport>,
) -> ViolationReport {
    let mut out = ViolationReport::new(condition);
    for p in parts {
        out.merge(p);
    }
    out
}
