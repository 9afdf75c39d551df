//! Flat verification records, one JSON object per line.

use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub label: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub convention_note: String,
    pub seed: u64,
    pub runtime_ms: u64,
}

impl VerificationReport {
    /// Compares `closed_form` against `oracle`. The relative error is used
    /// unless the oracle is exactly zero, in which case the absolute error is.
    pub fn compare(label: impl Into<String>, closed_form: f64, oracle: f64, tolerance: f64) -> Self {
        let abs_err = (closed_form - oracle).abs();
        let rel_err = if oracle != 0.0 { abs_err / oracle.abs() } else { abs_err };
        let passed = if oracle != 0.0 { rel_err <= tolerance } else { abs_err <= tolerance };
        Self {
            label: label.into(),
            closed_form,
            oracle,
            abs_err,
            rel_err,
            tolerance,
            passed: passed && closed_form.is_finite() && oracle.is_finite(),
            convention_note: String::new(),
            seed: 0,
            runtime_ms: 0,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.convention_note = note.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_millis() as u64;
        self
    }

    /// Record for a check that only has a pass/fail outcome.
    pub fn flag(label: impl Into<String>, passed: bool, tolerance: f64) -> Self {
        let mut r = Self::compare(label, 0.0, 0.0, tolerance);
        r.passed = passed;
        r
    }
}
