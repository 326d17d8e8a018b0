use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{DEFAULT_BUDGET, MAX_PATH_LEN};

/// Model hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// Contextual entities retrieved per query.
    pub k: usize,
    /// Path types kept per contextual entity.
    pub n_paths: usize,
    /// Maximum path length.
    pub max_len: usize,
    /// Linkage threshold for flat cluster extraction.
    pub tau: f64,
    /// Enumeration state budget per entity.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k: 10,
            n_paths: 80,
            max_len: 3,
            tau: 0.6,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl Hyperparams {
    pub fn new(k: usize, n_paths: usize, max_len: usize, tau: f64) -> Self {
        Hyperparams {
            k,
            n_paths,
            max_len,
            tau,
            budget: DEFAULT_BUDGET,
        }
    }

    /// Published settings for the standard benchmarks, by dataset name.
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "wn18rr" => Some(Self::new(40, 60, 5, 0.25)),
            "fb122" => Some(Self::new(10, 80, 3, 0.6)),
            "nell-995" | "nell995" | "nell" => Some(Self::new(15, 25, 3, 0.95)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.n_paths == 0 {
            return bad("N must be at least 1".into());
        }
        if self.max_len == 0 || self.max_len > MAX_PATH_LEN {
            return bad(format!("path length must be in 1..={MAX_PATH_LEN}, got {}", self.max_len));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau must be in [0, 1], got {}", self.tau));
        }
        if self.budget == 0 {
            return bad("path budget must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in ["WN18RR", "fb122", "NELL-995"] {
            Hyperparams::preset(name).unwrap().validate().unwrap();
        }
        assert_eq!(Hyperparams::preset("wn18rr").unwrap(), Hyperparams::new(40, 60, 5, 0.25));
        assert!(Hyperparams::preset("yago").is_none());
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let ok = Hyperparams::default();
        ok.validate().unwrap();
        for bad in [
            Hyperparams { k: 0, ..ok.clone() },
            Hyperparams { n_paths: 0, ..ok.clone() },
            Hyperparams { max_len: 0, ..ok.clone() },
            Hyperparams { max_len: 8, ..ok.clone() },
            Hyperparams { tau: 1.5, ..ok.clone() },
            Hyperparams { tau: f64::NAN, ..ok.clone() },
            Hyperparams { budget: 0, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))), "{bad:?}");
        }
    }

    #[test]
    fn json_round_trip() {
        let h = Hyperparams::preset("nell").unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(serde_json::from_str::<Hyperparams>(&s).unwrap(), h);
        let partial: Hyperparams = serde_json::from_str(r#"{"k":1,"n_paths":2,"max_len":3,"tau":0.5}"#).unwrap();
        assert_eq!(partial.budget, DEFAULT_BUDGET);
    }
}
