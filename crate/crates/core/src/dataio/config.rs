//! Run configuration: flat `key = value` text with typed validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::featkit::NormMode;
use crate::synnet::{RenormRule, SimilarityWeights};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    /// No consolidation; clocks are still reset on activation.
    NoSc,
    /// No renormalization; clocks still advance.
    NoSr,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [Ablation::Full, Ablation::NoSc, Ablation::NoSr];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoSc => "no_sc",
            Ablation::NoSr => "no_sr",
        }
    }
}

impl FromStr for Ablation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Ablation::Full),
            "no_sc" | "no-sc" => Ok(Ablation::NoSc),
            "no_sr" | "no-sr" => Ok(Ablation::NoSr),
            other => Err(format!("unknown ablation `{other}` (expected full, no_sc or no_sr)")),
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub xi: f64,
    pub omega_t: f64,
    pub omega_f: f64,
    pub omega_tf: f64,
    pub alpha: f64,
    pub top_k: usize,
    pub eta: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub strength_cap: f64,
    pub importance_eps: f64,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub ssl_epochs: usize,
    pub ssl_lr: f64,
    pub cl_epochs: usize,
    pub cl_lr: f64,
    /// 0 means "as many samples as the incoming subject provides".
    pub replay_budget: usize,
    pub renorm_period: usize,
    pub renorm_rule: RenormRule,
    /// 0 disables pruning.
    pub prune_threshold: f64,
    pub norm_mode: NormMode,
    pub fallback_fanout: usize,
    pub cpc_horizon: usize,
    pub cpc_stride: usize,
    pub eval_fraction: f64,
    pub source_frac: f64,
    pub seed: u64,
    pub repeats: usize,
    pub ablation: Ablation,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            xi: 0.1,
            omega_t: 0.9,
            omega_f: 1.5,
            omega_tf: 1.2,
            alpha: 0.2,
            top_k: 15,
            eta: 0.9,
            beta: 0.7,
            lambda: 30.0,
            gamma: 1.3,
            strength_cap: 3.0,
            importance_eps: 1e-6,
            pretrain_epochs: 200,
            pretrain_lr: 0.5,
            ssl_epochs: 10,
            ssl_lr: 1e-3,
            cl_epochs: 50,
            cl_lr: 0.2,
            replay_budget: 0,
            renorm_period: 1,
            renorm_rule: RenormRule::MaxClock,
            prune_threshold: 0.0,
            norm_mode: NormMode::Cohort,
            fallback_fanout: 3,
            cpc_horizon: 3,
            cpc_stride: 1,
            eval_fraction: 0.5,
            source_frac: 0.3,
            seed: 0,
            repeats: 1,
            ablation: Ablation::Full,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn check(key: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, format!("out of range: must be {what}")))
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 31] = [
        "xi",
        "omega_t",
        "omega_f",
        "omega_tf",
        "alpha",
        "top_k",
        "eta",
        "beta",
        "lambda",
        "gamma",
        "strength_cap",
        "importance_eps",
        "pretrain_epochs",
        "pretrain_lr",
        "ssl_epochs",
        "ssl_lr",
        "cl_epochs",
        "cl_lr",
        "replay_budget",
        "renorm_period",
        "renorm_rule",
        "prune_threshold",
        "norm_mode",
        "fallback_fanout",
        "cpc_horizon",
        "cpc_stride",
        "eval_fraction",
        "source_frac",
        "seed",
        "repeats",
        "ablation",
    ];

    pub fn similarity_weights(&self) -> SimilarityWeights {
        SimilarityWeights {
            time: self.omega_t,
            freq: self.omega_f,
            tf: self.omega_tf,
        }
    }

    /// Sets one key from its text value, with range checks.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "xi" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x > -1.0 && x < 1.0, "in (-1, 1)")?;
                self.xi = x;
            }
            "omega_t" | "omega_f" | "omega_tf" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x > 0.0 && x.is_finite(), "positive")?;
                match key {
                    "omega_t" => self.omega_t = x,
                    "omega_f" => self.omega_f = x,
                    _ => self.omega_tf = x,
                }
            }
            "alpha" | "beta" => {
                let x: f64 = parse_num(key, v)?;
                check(key, (0.0..=1.0).contains(&x), "in [0, 1]")?;
                if key == "alpha" {
                    self.alpha = x
                } else {
                    self.beta = x
                }
            }
            "eta" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x > 0.0 && x < 1.0, "in (0, 1)")?;
                self.eta = x;
            }
            "eval_fraction" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x > 0.0 && x < 1.0, "in (0, 1)")?;
                self.eval_fraction = x;
            }
            "source_frac" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x > 0.0 && x < 1.0, "in (0, 1)")?;
                self.source_frac = x;
            }
            "top_k" | "renorm_period" | "repeats" | "fallback_fanout" | "cpc_stride" => {
                let x: usize = parse_num(key, v)?;
                check(key, x >= 1, ">= 1")?;
                match key {
                    "top_k" => self.top_k = x,
                    "renorm_period" => self.renorm_period = x,
                    "repeats" => self.repeats = x,
                    "fallback_fanout" => self.fallback_fanout = x,
                    _ => self.cpc_stride = x,
                }
            }
            "pretrain_epochs" | "ssl_epochs" | "cl_epochs" | "replay_budget" | "cpc_horizon" => {
                let x: usize = parse_num(key, v)?;
                match key {
                    "pretrain_epochs" => self.pretrain_epochs = x,
                    "ssl_epochs" => self.ssl_epochs = x,
                    "cl_epochs" => self.cl_epochs = x,
                    "replay_budget" => self.replay_budget = x,
                    _ => self.cpc_horizon = x,
                }
            }
            "lambda" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x > 0.0, "positive")?;
                self.lambda = x;
            }
            "gamma" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x >= 1.0 && x.is_finite(), ">= 1")?;
                self.gamma = x;
            }
            "strength_cap" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x >= 1.0 && x.is_finite(), ">= 1")?;
                self.strength_cap = x;
            }
            "importance_eps" | "pretrain_lr" | "ssl_lr" | "cl_lr" | "prune_threshold" => {
                let x: f64 = parse_num(key, v)?;
                check(key, x >= 0.0 && x.is_finite(), "non-negative")?;
                match key {
                    "importance_eps" => {
                        check(key, x > 0.0, "positive")?;
                        self.importance_eps = x
                    }
                    "pretrain_lr" => self.pretrain_lr = x,
                    "ssl_lr" => self.ssl_lr = x,
                    "cl_lr" => self.cl_lr = x,
                    _ => self.prune_threshold = x,
                }
            }
            "renorm_rule" => {
                self.renorm_rule = match v {
                    "max_clock" => RenormRule::MaxClock,
                    "both_endpoints" => RenormRule::BothEndpoints,
                    _ => return Err(Error::config(key, "expected max_clock or both_endpoints")),
                }
            }
            "norm_mode" => {
                self.norm_mode = match v {
                    "cohort" => NormMode::Cohort,
                    "within_subject" => NormMode::WithinSubject,
                    _ => return Err(Error::config(key, "expected cohort or within_subject")),
                }
            }
            "seed" => self.seed = parse_num(key, v)?,
            "ablation" => self.ablation = v.parse().map_err(|e: String| Error::config(key, e))?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), "expected `key = value`"))?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }

    /// Every key in a fixed order; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let rule = match self.renorm_rule {
            RenormRule::MaxClock => "max_clock",
            RenormRule::BothEndpoints => "both_endpoints",
        };
        let norm = match self.norm_mode {
            NormMode::Cohort => "cohort",
            NormMode::WithinSubject => "within_subject",
        };
        let values: [String; 31] = [
            self.xi.to_string(),
            self.omega_t.to_string(),
            self.omega_f.to_string(),
            self.omega_tf.to_string(),
            self.alpha.to_string(),
            self.top_k.to_string(),
            self.eta.to_string(),
            self.beta.to_string(),
            self.lambda.to_string(),
            self.gamma.to_string(),
            self.strength_cap.to_string(),
            self.importance_eps.to_string(),
            self.pretrain_epochs.to_string(),
            self.pretrain_lr.to_string(),
            self.ssl_epochs.to_string(),
            self.ssl_lr.to_string(),
            self.cl_epochs.to_string(),
            self.cl_lr.to_string(),
            self.replay_budget.to_string(),
            self.renorm_period.to_string(),
            rule.to_owned(),
            self.prune_threshold.to_string(),
            norm.to_owned(),
            self.fallback_fanout.to_string(),
            self.cpc_horizon.to_string(),
            self.cpc_stride.to_string(),
            self.eval_fraction.to_string(),
            self.source_frac.to_string(),
            self.seed.to_string(),
            self.repeats.to_string(),
            self.ablation.name().to_owned(),
        ];
        let mut out = String::from("# resolved run configuration\n");
        for (k, v) in Self::KEYS.iter().zip(values) {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Reads a config file; missing keys keep their defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_table_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.alpha, 0.2);
        assert_eq!(c.top_k, 15);
        assert_eq!(c.eta, 0.9);
        assert_eq!(c.beta, 0.7);
        assert_eq!(c.lambda, 30.0);
        assert_eq!(c.gamma, 1.3);
        assert_eq!((c.omega_t, c.omega_f, c.omega_tf), (0.9, 1.5, 1.2));
        assert_eq!(c.strength_cap, 3.0);
    }

    #[test]
    fn out_of_range_names_key() {
        let e = RunConfig::parse("alpha = 1.5").unwrap_err();
        assert!(e.to_string().contains("alpha"), "{e}");
        let e = RunConfig::parse("bogus = 1").unwrap_err();
        assert!(e.to_string().contains("bogus"));
        assert!(RunConfig::parse("gamma = 0.5").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn single_override() {
        let c = RunConfig::parse("# comment\nxi = 0.4\n").unwrap();
        assert_eq!(c.xi, 0.4);
        assert_eq!(RunConfig { xi: 0.1, ..c }, RunConfig::default());
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set("ablation", "no_sr").unwrap();
        c.set("renorm_rule", "both_endpoints").unwrap();
        c.set("ssl_lr", "0.00123").unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
