//! Flat TOML experiment configuration. Every key is optional; see
//! [`ExperimentConfig::default`] for the defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use avgpg::complexity::SearchBudget;
use avgpg::mdp::{KernelFamily, MdpGeneratorSpec, RewardFamily};
use avgpg::optimizer::{RunConfig, StepSize};
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SizeSweep,
    RewardDiameter,
    CpSweep,
    ConstantScaling,
    BoundVerify,
    DiscountCompare,
    Constants,
    Evaluate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::SizeSweep,
        ExperimentKind::RewardDiameter,
        ExperimentKind::CpSweep,
        ExperimentKind::ConstantScaling,
        ExperimentKind::BoundVerify,
        ExperimentKind::DiscountCompare,
        ExperimentKind::Constants,
        ExperimentKind::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SizeSweep => "size-sweep",
            ExperimentKind::RewardDiameter => "reward-diameter",
            ExperimentKind::CpSweep => "cp-sweep",
            ExperimentKind::ConstantScaling => "constant-scaling",
            ExperimentKind::BoundVerify => "bound-verify",
            ExperimentKind::DiscountCompare => "discount-compare",
            ExperimentKind::Constants => "constants",
            ExperimentKind::Evaluate => "evaluate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ExperimentError::UnknownKind(s.to_string()))
    }
}

/// `"certified"`, `"search"`, `"empirical"` or a positive number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Fixed(f64),
    Named(String),
}

impl StepSpec {
    pub fn resolve(&self) -> Result<StepSize> {
        match self {
            StepSpec::Fixed(eta) if *eta > 0.0 && eta.is_finite() => Ok(StepSize::Fixed(*eta)),
            StepSpec::Fixed(eta) => Err(ExperimentError::Config(format!(
                "step_size {eta} must be positive"
            ))),
            StepSpec::Named(name) => match name.as_str() {
                "certified" => Ok(StepSize::Certified),
                "search" => Ok(StepSize::Search),
                "empirical" => Ok(StepSize::Empirical),
                other => Err(ExperimentError::Config(format!("unknown step_size '{other}'"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when given.
    pub kind: Option<ExperimentKind>,
    pub seeds: Vec<u64>,
    /// `[S, A]` pairs for the size sweep; the first entry is also the
    /// instance used by `constants` and `evaluate`.
    pub sizes: Vec<[usize; 2]>,
    /// `dirichlet-uniform`, `permutation-deterministic` or `sparse`.
    pub kernel_family: String,
    pub sparse_nonzeros: usize,
    /// `uniform-range`, `sparse` or `two-level`.
    pub reward_family: String,
    pub reward_density: f64,
    pub iterations: usize,
    pub step_size: StepSpec,
    pub record_every: usize,
    pub search_evaluations: usize,
    /// Size and δ grid of the reward-diameter sweep.
    pub diameter_size: [usize; 2],
    pub deltas: Vec<f64>,
    /// Size and interpolation weights of the C_p sweep.
    pub cp_size: [usize; 2],
    pub cp_weights: Vec<f64>,
    /// Grid and instance count of the constant-scaling study.
    pub scaling_states: Vec<usize>,
    pub scaling_actions: Vec<usize>,
    pub scaling_instances: usize,
    /// Instance size of bound verification.
    pub bound_size: [usize; 2],
    /// Discounted comparison: size, PGA iterations and the number of
    /// discounts `γ_j = 1 − 2^{−j}`.
    pub discount_size: [usize; 2],
    pub discount_iterations: usize,
    pub discount_levels: usize,
    /// Starting policy: `None` for uniform, otherwise a random-policy seed.
    pub policy_seed: Option<u64>,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            seeds: (0..5).collect(),
            sizes: vec![[3, 3], [10, 10], [40, 40], [60, 60]],
            kernel_family: "dirichlet-uniform".into(),
            sparse_nonzeros: 2,
            reward_family: "uniform-range".into(),
            reward_density: 0.3,
            iterations: 20_000,
            step_size: StepSpec::Named("certified".into()),
            record_every: 1,
            search_evaluations: 2000,
            diameter_size: [20, 20],
            deltas: vec![0.0, 0.25, 0.5, 1.0],
            cp_size: [10, 10],
            cp_weights: vec![0.0, 0.35, 0.7],
            scaling_states: vec![5, 10],
            scaling_actions: vec![2, 4, 8, 16],
            scaling_instances: 5,
            bound_size: [4, 3],
            discount_size: [4, 3],
            discount_iterations: 200,
            discount_levels: 10,
            policy_seed: None,
            workers: 0,
        }
    }
}

fn check_size(name: &str, size: [usize; 2]) -> Result<()> {
    if size[0] == 0 || size[1] == 0 {
        return Err(ExperimentError::Config(format!("{name} must be positive, got {size:?}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if let Some(k) = self.kind {
            if k != kind {
                return bad(format!("config is for '{k}' but '{kind}' was requested"));
            }
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        if self.sizes.is_empty() {
            return bad("sizes must be nonempty".into());
        }
        for &size in &self.sizes {
            check_size("sizes", size)?;
        }
        for (name, size) in [
            ("diameter_size", self.diameter_size),
            ("cp_size", self.cp_size),
            ("bound_size", self.bound_size),
            ("discount_size", self.discount_size),
        ] {
            check_size(name, size)?;
        }
        if self.iterations == 0 || self.record_every == 0 || self.discount_iterations == 0 {
            return bad("iterations, record_every and discount_iterations must be positive".into());
        }
        if self.deltas.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return bad("deltas must lie in [0, 1]".into());
        }
        if self.cp_weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return bad("cp_weights must lie in [0, 1]".into());
        }
        if self.scaling_instances == 0 {
            return bad("scaling_instances must be positive".into());
        }
        if self.discount_levels == 0 || self.discount_levels > 40 {
            return bad("discount_levels must be in 1..=40".into());
        }
        self.step_size.resolve()?;
        for &[s, a] in &self.sizes {
            self.generator(s, a, 0)?.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<KernelFamily> {
        match self.kernel_family.as_str() {
            "dirichlet-uniform" => Ok(KernelFamily::DirichletUniform),
            "permutation-deterministic" => Ok(KernelFamily::PermutationDeterministic),
            "sparse" => Ok(KernelFamily::Sparse {
                nonzeros: self.sparse_nonzeros,
            }),
            other => Err(ExperimentError::Config(format!("unknown kernel_family '{other}'"))),
        }
    }

    pub fn reward(&self) -> Result<RewardFamily> {
        match self.reward_family.as_str() {
            "uniform-range" => Ok(RewardFamily::UniformRange),
            "sparse" => Ok(RewardFamily::Sparse {
                density: self.reward_density,
            }),
            "two-level" => Ok(RewardFamily::TwoLevel),
            other => Err(ExperimentError::Config(format!("unknown reward_family '{other}'"))),
        }
    }

    pub fn generator(&self, s: usize, a: usize, seed: u64) -> Result<MdpGeneratorSpec> {
        Ok(MdpGeneratorSpec::new(s, a, self.kernel()?, self.reward()?, seed))
    }

    pub fn budget(&self, seed: u64) -> SearchBudget {
        SearchBudget {
            evaluations: self.search_evaluations,
            seed,
            ..SearchBudget::default()
        }
    }

    pub fn run_config(&self, seed: u64) -> Result<RunConfig> {
        Ok(RunConfig {
            step_size: self.step_size.resolve()?,
            max_iters: self.iterations,
            record_every: self.record_every,
            budget: self.budget(seed),
            ..RunConfig::default()
        })
    }

    /// Replaces the seed list by `seed..seed + len`.
    pub fn override_seeds(&mut self, seed: u64) {
        let n = self.seeds.len() as u64;
        self.seeds = (seed..seed + n).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        for kind in ExperimentKind::ALL {
            cfg.validate(kind).unwrap();
        }
    }

    #[test]
    fn step_size_forms() {
        let cfg = ExperimentConfig::from_toml("step_size = 0.1").unwrap();
        assert_eq!(cfg.step_size.resolve().unwrap(), StepSize::Fixed(0.1));
        let cfg = ExperimentConfig::from_toml("step_size = \"search\"").unwrap();
        assert_eq!(cfg.step_size.resolve().unwrap(), StepSize::Search);
        let cfg = ExperimentConfig::from_toml("step_size = \"fast\"").unwrap();
        assert!(cfg.validate(ExperimentKind::SizeSweep).is_err());
        let cfg = ExperimentConfig::from_toml("step_size = -1.0").unwrap();
        assert!(cfg.validate(ExperimentKind::SizeSweep).unwrap_err().is_config());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml("unknown_key = 1").is_err());
        assert!(ExperimentConfig::from_toml("seeds = \"x\"").is_err());
        for text in [
            "seeds = []",
            "sizes = [[0, 3]]",
            "deltas = [2.0]",
            "kernel_family = \"other\"",
            "reward_family = \"sparse\"\nreward_density = 1.5",
            "kind = \"cp-sweep\"",
            "iterations = 0",
        ] {
            let cfg = ExperimentConfig::from_toml(text).unwrap();
            assert!(cfg.validate(ExperimentKind::SizeSweep).is_err(), "{text}");
        }
    }

    #[test]
    fn kind_round_trip() {
        for kind in ExperimentKind::ALL {
            assert_eq!(kind.as_str().parse::<ExperimentKind>().unwrap(), kind);
        }
        assert!("plot".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn seed_override_keeps_count() {
        let mut cfg = ExperimentConfig::default();
        cfg.override_seeds(10);
        assert_eq!(cfg.seeds, vec![10, 11, 12, 13, 14]);
    }
}
