//! Verification reports shared by the classical and quantum checks.

use serde::{Deserialize, Serialize};

/// One named comparison against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<usize>,
    pub tolerance: f64,
    pub max_abs_deviation: f64,
    pub pass: bool,
    /// Where the largest deviation was found, if it failed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub location: Option<String>,
}

/// A recorded quantity that no check constrains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<Note>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `deviation ≤ tolerance`. NaN deviations fail.
    pub fn check(
        &mut self,
        name: impl Into<String>,
        t: Option<usize>,
        tolerance: f64,
        deviation: f64,
        location: Option<String>,
    ) -> bool {
        let pass = deviation <= tolerance;
        self.checks.push(CheckRecord {
            name: name.into(),
            t,
            tolerance,
            max_abs_deviation: deviation,
            pass,
            location: if pass { None } else { location },
        });
        pass
    }

    pub fn note(&mut self, name: impl Into<String>, value: f64) {
        self.notes.push(Note { name: name.into(), value });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_abs_deviation).fold(0.0, f64::max)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

/// Running maximum of deviations that remembers where it occurred.
#[derive(Debug, Clone, Default)]
pub(crate) struct MaxTracker {
    pub value: f64,
    pub location: Option<String>,
}

impl MaxTracker {
    pub fn observe(&mut self, deviation: f64, location: impl FnOnce() -> String) {
        let d = if deviation.is_nan() { f64::INFINITY } else { deviation };
        if self.location.is_none() || d > self.value {
            self.value = d.max(self.value);
            self.location = Some(location());
        }
    }
}
