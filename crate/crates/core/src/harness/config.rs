//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. The token `inf` stands for ε = ∞ (no privacy noise).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dp::SvtVariant;
use crate::environment::{ContextDistribution, InstanceParams};
use crate::error::HarnessError;
use crate::policy::{PolicyConfig, PolicyKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Instance template; the seed is replaced per replication.
    pub instance: InstanceParams,
    /// Policy template; ε is replaced by each entry of `epsilons`.
    pub policy: PolicyConfig,
    pub epsilons: Vec<f64>,
    pub baselines: Vec<PolicyKind>,
    pub horizon: usize,
    /// Set when the configured horizon was not a power of two.
    pub requested_horizon: Option<usize>,
    pub replications: usize,
    pub seed: u64,
    /// α used for accuracy.csv; `None` uses the calibrated value per ε.
    pub alpha: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance: InstanceParams::default(),
            policy: PolicyConfig::default(),
            epsilons: vec![1.0],
            baselines: Vec::new(),
            horizon: 1024,
            requested_horizon: None,
            replications: 10,
            seed: 0,
            alpha: None,
            out_dir: None,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> HarnessError {
    HarnessError::Config(format!("{key} = {value}: {what}"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, HarnessError> {
    match value {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => value.parse::<f64>().map_err(|_| bad(key, value, "expected a number")),
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value.parse::<T>().map_err(|_| bad(key, value, "expected a nonnegative integer"))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Formats ε for file contents and labels.
pub fn format_epsilon(eps: f64) -> String {
    if eps.is_infinite() {
        "inf".to_string()
    } else {
        format!("{eps}")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(HarnessError::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let inst = &mut self.instance;
        let pol = &mut self.policy;
        match key {
            "d" => inst.d = parse_int(key, value)?,
            "s0" => inst.s0 = parse_int(key, value)?,
            "arms" | "K" => inst.arms = parse_int(key, value)?,
            "theta_min" => inst.theta_min = parse_f64(key, value)?,
            "c_theta" => inst.c_theta = parse_f64(key, value)?,
            "c_x" => inst.c_x = parse_f64(key, value)?,
            "sigma" => inst.sigma = parse_f64(key, value)?,
            "context_dist" => {
                inst.context_dist =
                    ContextDistribution::parse(value).ok_or_else(|| bad(key, value, "unknown distribution"))?
            }
            "lambda0" => pol.lambda0 = parse_f64(key, value)?,
            "epsilon" => self.epsilons = list(value).map(|v| parse_f64(key, v)).collect::<Result<_, _>>()?,
            "delta" => pol.delta = parse_f64(key, value)?,
            "gamma_floor" => pol.gamma_floor = parse_f64(key, value)?,
            "wishart_scale" => pol.wishart_scale = parse_f64(key, value)?,
            "wishart_k" => pol.wishart_k = Some(parse_int(key, value)?),
            "svt_variant" => {
                pol.svt_variant = SvtVariant::parse(value).ok_or_else(|| bad(key, value, "unknown variant"))?
            }
            "phi_sq" => pol.phi_sq = Some(parse_f64(key, value)?),
            "ridge" => pol.ridge = Some(parse_f64(key, value)?),
            "lasso_tol" => pol.lasso.tol = parse_f64(key, value)?,
            "lasso_max_iters" => pol.lasso.max_iters = Some(parse_int(key, value)?),
            "horizon" | "T" => self.horizon = parse_int(key, value)?,
            "replications" => self.replications = parse_int(key, value)?,
            "seed" => self.seed = parse_int(key, value)?,
            "baselines" => {
                self.baselines = list(value)
                    .map(|v| PolicyKind::parse(v).ok_or_else(|| bad(key, v, "unknown policy")))
                    .collect::<Result<_, _>>()?
            }
            "alpha" => self.alpha = Some(parse_f64(key, value)?),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            _ => return Err(HarnessError::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    /// Checks ranges and pads the horizon up to a power of two.
    pub fn validate(&mut self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        let i = &self.instance;
        if i.d < 2 || i.s0 == 0 || i.s0 >= i.d {
            return err(format!("need d >= 2 and 1 <= s0 < d, got d={}, s0={}", i.d, i.s0));
        }
        if i.arms == 0 {
            return err("arms must be at least 1".into());
        }
        if !(i.theta_min > 0.0) || !(i.c_x > 0.0) || !(i.sigma >= 0.0) || !i.sigma.is_finite() {
            return err("theta_min and c_x must be positive, sigma finite and nonnegative".into());
        }
        if i.theta_min * (i.s0 as f64).sqrt() > i.c_theta * (1.0 + 1e-12) {
            return err(format!("theta_min*sqrt(s0) exceeds c_theta = {}", i.c_theta));
        }
        let p = &self.policy;
        if !(p.lambda0 >= 0.0) || !p.lambda0.is_finite() {
            return err("lambda0 must be finite and nonnegative".into());
        }
        if !(p.delta > 0.0 && p.delta < 1.0) {
            return err(format!("delta must lie in (0, 1), got {}", p.delta));
        }
        if !(p.wishart_scale > 0.0) || !(p.gamma_floor > 0.0) {
            return err("wishart_scale and gamma_floor must be positive".into());
        }
        if p.phi_sq.is_some_and(|v| !(v > 0.0)) || p.ridge.is_some_and(|v| !(v > 0.0)) {
            return err("phi_sq and ridge must be positive".into());
        }
        if !(p.lasso.tol > 0.0) {
            return err("lasso_tol must be positive".into());
        }
        if self.epsilons.is_empty() && self.baselines.is_empty() {
            return err("nothing to run: epsilon and baselines both empty".into());
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return err("epsilon values must be positive (use inf for no noise)".into());
        }
        if self.replications == 0 || self.horizon == 0 {
            return err("replications and horizon must be positive".into());
        }
        if self.alpha.is_some_and(|a| !(a >= 0.0)) {
            return err("alpha must be nonnegative".into());
        }
        if !self.horizon.is_power_of_two() {
            let padded = self.horizon.next_power_of_two();
            log::warn!("horizon {} padded to {padded}", self.horizon);
            self.requested_horizon.get_or_insert(self.horizon);
            self.horizon = padded;
        }
        self.epsilons.sort_by(f64::total_cmp);
        self.epsilons.dedup();
        Ok(())
    }

    /// Canonical text form; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let i = &self.instance;
        let p = &self.policy;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("d", i.d.to_string());
        kv("s0", i.s0.to_string());
        kv("arms", i.arms.to_string());
        kv("theta_min", format!("{:?}", i.theta_min));
        kv("c_theta", format!("{:?}", i.c_theta));
        kv("c_x", format!("{:?}", i.c_x));
        kv("sigma", format!("{:?}", i.sigma));
        kv("context_dist", i.context_dist.name().to_string());
        kv("lambda0", format!("{:?}", p.lambda0));
        kv(
            "epsilon",
            self.epsilons.iter().map(|e| if e.is_infinite() { "inf".into() } else { format!("{e:?}") }).collect::<Vec<_>>().join(","),
        );
        kv("delta", format!("{:?}", p.delta));
        kv("gamma_floor", format!("{:?}", p.gamma_floor));
        kv("wishart_scale", format!("{:?}", p.wishart_scale));
        if let Some(k) = p.wishart_k {
            kv("wishart_k", k.to_string());
        }
        kv("svt_variant", p.svt_variant.name().to_string());
        if let Some(v) = p.phi_sq {
            kv("phi_sq", format!("{v:?}"));
        }
        if let Some(v) = p.ridge {
            kv("ridge", format!("{v:?}"));
        }
        kv("lasso_tol", format!("{:?}", p.lasso.tol));
        if let Some(v) = p.lasso.max_iters {
            kv("lasso_max_iters", v.to_string());
        }
        kv("horizon", self.horizon.to_string());
        kv("replications", self.replications.to_string());
        kv("seed", self.seed.to_string());
        if !self.baselines.is_empty() {
            kv("baselines", self.baselines.iter().map(|b| b.name()).collect::<Vec<_>>().join(","));
        }
        if let Some(a) = self.alpha {
            kv("alpha", format!("{a:?}"));
        }
        s
    }
}
