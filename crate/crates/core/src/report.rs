//! Small result records shared by the verification entry points.

/// Outcome of one named numerical check. Two shapes cover everything the
/// library verifies: deviation checks (measured distance from an identity,
/// bound 0) and bound checks (measured value against an upper bound).
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity: a deviation or a value.
    pub measured: f64,
    /// The bound the measurement is compared against.
    pub bound: f64,
    /// Slack allowed on top of the bound.
    pub tolerance: f64,
}

impl Check {
    /// Deviation from an exact identity: passes when `deviation <= tolerance`.
    pub fn deviation(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: deviation.abs() <= tolerance,
            measured: deviation,
            bound: 0.0,
            tolerance,
        }
    }

    /// Upper bound check: passes when `value <= bound + tolerance`.
    pub fn upper(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound + tolerance,
            measured: value,
            bound,
            tolerance,
        }
    }

    /// Lower bound check: passes when `value >= bound - tolerance`.
    pub fn lower(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= bound - tolerance,
            measured: value,
            bound,
            tolerance,
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
