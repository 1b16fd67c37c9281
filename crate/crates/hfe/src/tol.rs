//! Numerical tolerances shared by every check.

use crate::error::HfeError;

/// Environment variable overriding the default relative tolerance.
pub const TOL_REL_ENV: &str = "HFE_TOL_REL";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance for identities between nonzero quantities.
    pub rel: f64,
    /// Absolute tolerance for zero patterns and reality checks.
    pub abs: f64,
    /// Determinants below this magnitude count as singular.
    pub singular: f64,
    /// Closeness to zero that aborts square-root tracking.
    pub track: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: 1e-9,
            abs: 1e-10,
            singular: 1e-12,
            track: 1e-6,
        }
    }
}

impl Tolerances {
    /// Defaults, with `rel` taken from `HFE_TOL_REL` when it parses.
    pub fn from_env() -> Self {
        let mut t = Tolerances::default();
        if let Ok(v) = std::env::var(TOL_REL_ENV) {
            if let Ok(x) = v.trim().parse::<f64>() {
                if x.is_finite() && x > 0.0 {
                    t.rel = x;
                }
            }
        }
        t
    }

    /// Apply a `key=value` override as accepted on the command line.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), HfeError> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| HfeError::Parse(format!("tolerance override `{spec}` is not key=value")))?;
        let x: f64 = value
            .trim()
            .parse()
            .map_err(|_| HfeError::Parse(format!("tolerance value `{value}` is not a number")))?;
        if !(x.is_finite() && x > 0.0) {
            return Err(HfeError::Parse(format!("tolerance `{key}` must be positive")));
        }
        match key.trim() {
            "rel" | "tol_rel" => self.rel = x,
            "abs" | "tol_abs" => self.abs = x,
            "singular" | "tol_singular" => self.singular = x,
            "track" | "tol_track" => self.track = x,
            other => return Err(HfeError::Parse(format!("unknown tolerance `{other}`"))),
        }
        Ok(())
    }
}
