//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use steklov_core::{zeta::S_MAX, Gallery, WeightFunction};

use crate::HarnessError;

/// Weights an experiment runs over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Named gallery entries; an empty list means the standard gallery.
    Gallery {
        #[serde(default)]
        names: Vec<String>,
    },
    /// `count` random weights with seeds `seed, seed+1, …`.
    Random { sigma: f64, rho: f64, count: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "M_big")]
    pub m_big: usize,
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub k_list: Vec<usize>,
    pub family: Family,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub out_dir: PathBuf,
    /// Orders at which the two trace estimators are compared in `verify`.
    #[serde(default = "default_cross_check")]
    pub cross_check_s: Vec<f64>,
    /// `(t, s)` pairs for the sandwich check in `verify`.
    #[serde(default = "default_sandwich")]
    pub sandwich_pairs: Vec<(f64, f64)>,
    /// Exploratory `ψ` samples taken by `scan`.
    #[serde(default = "default_explore")]
    pub explore_s: Vec<f64>,
}

fn default_budget() -> u64 {
    steklov_core::invariants::DEFAULT_BUDGET
}

fn default_cross_check() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

fn default_sandwich() -> Vec<(f64, f64)> {
    vec![(1.0, 2.0), (1.0, 3.0), (2.0, 4.0)]
}

fn default_explore() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

fn sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    /// The grids of the verification suites, over `count` random weights.
    pub fn random_suite(seed: u64, count: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            seed,
            m: 8,
            m_big: 128,
            s_grid: vec![0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0],
            t_grid: vec![1.0, 2.0, 3.0, 4.0],
            k_list: vec![1, 2],
            family: Family::Random {
                sigma: 0.2,
                rho: 0.5,
                count,
            },
            budget: default_budget(),
            out_dir: out_dir.into(),
            cross_check_s: Vec::new(),
            sandwich_pairs: default_sandwich(),
            explore_s: default_explore(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if let Family::Random { sigma, rho, .. } = self.family {
            if !(rho > 0.0 && rho < 1.0) {
                return bad(format!("rho must lie in (0, 1), got {rho}"));
            }
            if !(sigma >= 0.0) {
                return bad(format!("sigma must be nonnegative, got {sigma}"));
            }
        }
        if let Family::Gallery { names } = &self.family {
            for name in names {
                if let Err(e) = name.parse::<Gallery>() {
                    return bad(e.to_string());
                }
            }
        }
        if self.m == 0 {
            return bad("M must be positive".into());
        }
        if self.m_big < 4 * self.m {
            return bad(format!("M_big = {} is below 4M = {}", self.m_big, 4 * self.m));
        }
        for (name, grid) in [
            ("s_grid", &self.s_grid),
            ("t_grid", &self.t_grid),
            ("cross_check_s", &self.cross_check_s),
            ("explore_s", &self.explore_s),
        ] {
            if !sorted(grid) {
                return bad(format!("{name} must be sorted ascending"));
            }
            if grid.iter().any(|&s| !(0.0..=S_MAX).contains(&s)) {
                return bad(format!("{name} must lie in [0, {S_MAX}]"));
            }
        }
        if self.t_grid.iter().any(|&t| t < 1.0) {
            return bad("t_grid must lie in [1, s_max]".into());
        }
        if let Some(p) = self
            .sandwich_pairs
            .iter()
            .find(|&&(t, s)| !(1.0 <= t && t <= s && s <= S_MAX))
        {
            return bad(format!("sandwich pair {p:?} needs 1 ≤ t ≤ s ≤ {S_MAX}"));
        }
        if self.k_list.iter().any(|&k| k == 0) {
            return bad("k_list entries must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let mut bare = self.clone();
        bare.out_dir = PathBuf::new();
        let text = serde_json::to_string(&bare).expect("config serialization");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// The weights of the family, labelled, in seed order. Failures to build a
    /// weight are kept so that they can become records.
    pub fn weights(&self) -> Vec<(String, Result<WeightFunction, String>)> {
        match &self.family {
            Family::Gallery { names } => {
                let entries: Vec<Gallery> = if names.is_empty() {
                    Gallery::standard()
                } else {
                    names.iter().filter_map(|n| n.parse().ok()).collect()
                };
                entries
                    .into_iter()
                    .map(|g| (g.to_string(), g.weight().map_err(|e| e.to_string())))
                    .collect()
            }
            Family::Random { sigma, rho, count } => (0..*count)
                .map(|i| {
                    let seed = self.seed + i;
                    let w = steklov_core::random_weight(seed, self.m, *sigma, *rho)
                        .map_err(|e| e.to_string());
                    (format!("seed={seed}"), w)
                })
                .collect(),
        }
    }
}
