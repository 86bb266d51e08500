//! Per-check results and the record written at the end of a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Label of the weight the check ran on.
    pub weight: String,
    pub status: Status,
    /// Signed distance to the threshold; negative means violated.
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    /// The weight as JSON, attached to every failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offending_weight: Option<String>,
}

impl Check {
    /// Pass iff `margin ≥ −tol`. A NaN margin fails.
    pub fn margin(name: &str, weight: &str, margin: f64, tol: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            weight: weight.into(),
            status: if margin >= -tol { Status::Pass } else { Status::Fail },
            margin: Some(margin),
            detail: detail.into(),
            offending_weight: None,
        }
    }

    pub fn with_status(name: &str, weight: &str, status: Status, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            weight: weight.into(),
            status,
            margin: None,
            detail: detail.into(),
            offending_weight: None,
        }
    }

    /// A failure that was an error rather than a violated inequality.
    pub fn error(name: &str, weight: &str, err: impl std::fmt::Display) -> Self {
        Self::with_status(name, weight, Status::Fail, err.to_string())
    }

    /// Turns a failure into a warning; used for empirical and conjectural checks.
    pub fn soft(mut self) -> Self {
        if self.status == Status::Fail {
            self.status = Status::Warn;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
    pub wall_clock_s: f64,
}

impl ResultRecord {
    pub fn status(&self) -> Status {
        self.checks
            .iter()
            .map(|c| c.status)
            .max_by_key(|s| match s {
                Status::Pass => 0,
                Status::Warn => 1,
                Status::Fail => 2,
            })
            .unwrap_or(Status::Pass)
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    /// Checks with the given name, in weight order.
    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name == name)
    }

    /// Smallest margin among checks with the given name.
    pub fn min_margin(&self, name: &str) -> Option<f64> {
        self.named(name).filter_map(|c| c.margin).reduce(f64::min)
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.status() == Status::Fail {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialization")
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} pass, {} warn, {} fail ({:.1}s)",
            self.command,
            self.count(Status::Pass),
            self.count(Status::Warn),
            self.count(Status::Fail),
            self.wall_clock_s
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_is_the_worst_check() {
        let mut r = ResultRecord {
            command: "verify".into(),
            config_hash: String::new(),
            checks: vec![Check::margin("a", "w", -1e-10, 1e-9, "")],
            artifacts: vec![],
            wall_clock_s: 0.0,
        };
        assert_eq!(r.status(), Status::Pass);
        assert_eq!(r.exit_code(), 0);
        r.checks.push(Check::margin("b", "w", -1.0, 0.0, "").soft());
        assert_eq!(r.status(), Status::Warn);
        assert_eq!(r.exit_code(), 0);
        r.checks.push(Check::error("c", "w", "boom"));
        assert_eq!(r.status(), Status::Fail);
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.min_margin("b"), Some(-1.0));
        let back: ResultRecord = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
