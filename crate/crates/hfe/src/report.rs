//! Verification reports and their JSON and text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde_json::Value;

use crate::tol::Tolerances;

/// Failure locations listed per check in text output.
const TEXT_FAILURES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    /// The property the check verifies, in words.
    pub property: String,
    pub residual: Option<f64>,
    pub passed: bool,
    /// Sample-point labels or error messages.
    pub failures: Vec<String>,
    /// A failure that contradicts a proven statement rather than bad input.
    pub falsified: bool,
}

impl CheckRecord {
    pub fn new(id: &str, property: &str) -> Self {
        CheckRecord {
            id: id.into(),
            property: property.into(),
            residual: None,
            passed: true,
            failures: Vec::new(),
            falsified: false,
        }
    }

    /// Passes iff `residual ≤ bound`.
    pub fn residual(mut self, residual: f64, bound: f64) -> Self {
        self.residual = Some(residual);
        self.passed &= residual.is_finite() && residual <= bound;
        self
    }

    pub fn require(mut self, ok: bool, why: impl Into<String>) -> Self {
        if !ok {
            self.passed = false;
            self.failures.push(why.into());
        }
        self
    }

    pub fn failures(mut self, labels: Vec<String>) -> Self {
        if !labels.is_empty() {
            self.passed = false;
            self.failures.extend(labels);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub scenario: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub pipelines: Vec<String>,
    pub checks: Vec<CheckRecord>,
    /// Chosen signs, counts and other constants, keyed by name.
    pub constants: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub wall_time: Duration,
}

impl VerificationReport {
    pub fn new(scenario: &str, seed: u64, tolerances: Tolerances) -> Self {
        VerificationReport {
            scenario: scenario.into(),
            seed,
            tolerances,
            pipelines: Vec::new(),
            checks: Vec::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn falsified(&self) -> bool {
        self.checks.iter().any(|c| c.falsified)
    }

    /// 0 all pass, 1 a check failed, 3 a falsification event.
    pub fn exit_code(&self) -> i32 {
        if self.falsified() {
            3
        } else if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_value(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                serde_json::json!({
                    "id": c.id,
                    "property": c.property,
                    "residual": c.residual.map(finite_or_null).unwrap_or(Value::Null),
                    "passed": c.passed,
                    "failures": c.failures,
                    "falsified": c.falsified,
                })
            })
            .collect();
        let t = &self.tolerances;
        serde_json::json!({
            "scenario": self.scenario,
            "seed": self.seed,
            "tolerances": {"rel": t.rel, "abs": t.abs, "singular": t.singular, "track": t.track},
            "pipelines": self.pipelines,
            "checks": checks,
            "constants": self.constants,
            "notes": self.notes,
            "passed": self.passed(),
            "exit_code": self.exit_code(),
        })
    }

    /// Sorted keys and floats with 12 significant digits; wall time is left
    /// out so that reruns are byte-identical.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write_value(&mut out, &self.to_value(), 0);
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# scenario {} seed {} pipelines [{}] wall {:.3}s",
            self.scenario,
            self.seed,
            self.pipelines.join(","),
            self.wall_time.as_secs_f64()
        );
        for c in &self.checks {
            let residual = match c.residual {
                Some(r) => format!(" residual={}", fmt_float(r)),
                None => String::new(),
            };
            let status = match (c.passed, c.falsified) {
                (true, _) => "PASS",
                (false, true) => "FAIL (falsified)",
                (false, false) => "FAIL",
            };
            let mut failures = String::new();
            if !c.failures.is_empty() {
                let shown: Vec<&str> = c.failures.iter().take(TEXT_FAILURES).map(String::as_str).collect();
                let more = c.failures.len().saturating_sub(TEXT_FAILURES);
                failures = format!(" at [{}]", shown.join(", "));
                if more > 0 {
                    let _ = write!(failures, " (+{more} more)");
                }
            }
            let _ = writeln!(out, "{}: {}{residual}{failures} {status}", c.id, c.property);
        }
        out
    }
}

fn finite_or_null(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// 12 significant digits in scientific notation; integral values as integers.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == x.trunc() && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    format!("{x:.11e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent + 1);
    let end = "  ".repeat(indent);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => out.push_str(&i.to_string()),
            (None, Some(u)) => out.push_str(&u.to_string()),
            _ => out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad);
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&end);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, &m[*k], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&end);
            out.push('}');
        }
    }
}
