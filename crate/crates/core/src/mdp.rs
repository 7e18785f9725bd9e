//! Tabular MDP and policy types, validation, and seeded instance generators.
//!
//! Kernels are stored flat in s-major / a-major / s'-minor order, the same
//! layout used by the JSON document format:
//!
//! ```text
//! kernel[(s * A + a) * S + s'] = P(s' | s, a)
//! reward[s * A + a]            = r(s, a)
//! ```
//!
//! All random generation goes through ChaCha8 (a counter-based stream
//! cipher), seeded from a `u64` with separate streams for the kernel and
//! the reward so that varying the reward family never perturbs the kernel.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::chain::{chain_structure, PolicyKernel};
use crate::error::{Error, Result};

/// Tolerance used for stochasticity checks.
pub const PROB_TOL: f64 = 1e-12;

const KERNEL_STREAM: u64 = 1;
const REWARD_STREAM: u64 = 2;
const POLICY_STREAM: u64 = 3;

/// Declared interval every reward entry must lie in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardRange {
    pub low: f64,
    pub high: f64,
}

impl RewardRange {
    pub const SIGNED_UNIT: RewardRange = RewardRange {
        low: -1.0,
        high: 1.0,
    };
    pub const UNIT: RewardRange = RewardRange {
        low: 0.0,
        high: 1.0,
    };

    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high
    }

    /// Largest absolute reward the range admits.
    pub fn magnitude(&self) -> f64 {
        self.low.abs().max(self.high.abs())
    }

    fn mid(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.high - self.low)
    }
}

impl Default for RewardRange {
    fn default() -> Self {
        RewardRange::SIGNED_UNIT
    }
}

/// Finite MDP with transition kernel `P(s'|s,a)` and reward `r(s,a)`.
///
/// Construction only checks shapes; use [`validate_mdp`] (or
/// [`TabularMdp::validated`]) for the stochasticity and range invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    kernel: Vec<f64>,
    reward: Vec<f64>,
    reward_range: RewardRange,
}

/// On-disk representation. `kernel` and `reward` are flattened as described
/// in the module docs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub kernel: Vec<f64>,
    pub reward: Vec<f64>,
    #[serde(default)]
    pub reward_range: RewardRange,
}

impl TryFrom<MdpDocument> for TabularMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        TabularMdp::new(doc.num_states, doc.num_actions, doc.kernel, doc.reward)
            .map(|m| m.with_reward_range(doc.reward_range))
    }
}

impl From<TabularMdp> for MdpDocument {
    fn from(m: TabularMdp) -> Self {
        MdpDocument {
            num_states: m.num_states,
            num_actions: m.num_actions,
            kernel: m.kernel,
            reward: m.reward,
            reward_range: m.reward_range,
        }
    }
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        kernel: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidArgument(
                "MDP needs at least one state and one action".into(),
            ));
        }
        let expected = num_states * num_actions * num_states;
        if kernel.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "kernel",
                expected,
                found: kernel.len(),
            });
        }
        if reward.len() != num_states * num_actions {
            return Err(Error::DimensionMismatch {
                what: "reward",
                expected: num_states * num_actions,
                found: reward.len(),
            });
        }
        Ok(TabularMdp {
            num_states,
            num_actions,
            kernel,
            reward,
            reward_range: RewardRange::default(),
        })
    }

    /// Builds from nested `kernel[s][a][s']` and `reward[s][a]`.
    pub fn from_nested(kernel: &[Vec<Vec<f64>>], reward: &[Vec<f64>]) -> Result<Self> {
        let s = kernel.len();
        let a = kernel.first().map_or(0, |k| k.len());
        let flat_kernel: Vec<f64> = kernel.iter().flatten().flatten().copied().collect();
        let flat_reward: Vec<f64> = reward.iter().flatten().copied().collect();
        TabularMdp::new(s, a, flat_kernel, flat_reward)
    }

    /// Same as [`TabularMdp::new`] but also rejects invariant violations.
    pub fn validated(
        num_states: usize,
        num_actions: usize,
        kernel: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self> {
        let mdp = TabularMdp::new(num_states, num_actions, kernel, reward)?;
        let report = validate_mdp(&mdp);
        if !report.is_ok() {
            return Err(Error::InvalidArgument(report.to_string()));
        }
        Ok(mdp)
    }

    pub fn with_reward_range(mut self, range: RewardRange) -> Self {
        self.reward_range = range;
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn reward_range(&self) -> RewardRange {
        self.reward_range
    }

    pub fn kernel_flat(&self) -> &[f64] {
        &self.kernel
    }

    pub fn reward_flat(&self) -> &[f64] {
        &self.reward
    }

    #[inline]
    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.kernel[(s * self.num_actions + a) * self.num_states + next]
    }

    /// `P(·|s,a)` as a slice of length S.
    #[inline]
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.kernel[start..start + self.num_states]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    /// `r(s,·)` as a slice of length A.
    pub fn reward_row(&self, s: usize) -> &[f64] {
        &self.reward[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// The A×S matrix `P_s(a, s') = P(s'|s,a)`.
    pub fn state_block(&self, s: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_actions, self.num_states, |a, j| {
            self.transition(s, a, j)
        })
    }

    /// Reward matrix as S×A.
    pub fn reward_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.num_states, self.num_actions, &self.reward)
    }

    /// `Σ_a w(s,a) P(·|s,a)` for an arbitrary S×A weight tensor. With a
    /// policy this is `P^π`; with a direction `u` it is `P^u`.
    pub fn mix_kernel(&self, weights: &DMatrix<f64>) -> DMatrix<f64> {
        let (s_n, a_n) = (self.num_states, self.num_actions);
        let mut out = DMatrix::zeros(s_n, s_n);
        for s in 0..s_n {
            for a in 0..a_n {
                let w = weights[(s, a)];
                if w == 0.0 {
                    continue;
                }
                for (j, p) in self.transition_row(s, a).iter().enumerate() {
                    out[(s, j)] += w * p;
                }
            }
        }
        out
    }

    /// `Σ_a w(s,a) r(s,a)` for an arbitrary S×A weight tensor.
    pub fn mix_reward(&self, weights: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(self.num_states, |s, _| {
            self.reward_row(s)
                .iter()
                .enumerate()
                .map(|(a, r)| weights[(s, a)] * r)
                .sum()
        })
    }

    fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if rows != self.num_states {
            return Err(Error::DimensionMismatch {
                what: "policy states",
                expected: self.num_states,
                found: rows,
            });
        }
        if cols != self.num_actions {
            return Err(Error::DimensionMismatch {
                what: "policy actions",
                expected: self.num_actions,
                found: cols,
            });
        }
        Ok(())
    }

    pub fn check_policy(&self, pi: &Policy) -> Result<()> {
        self.check_shape(pi.num_states(), pi.num_actions())
    }

    pub fn check_tensor(&self, t: &DMatrix<f64>) -> Result<()> {
        self.check_shape(t.nrows(), t.ncols())
    }

    /// Number of deterministic policies, `A^S`, as a float to avoid overflow.
    pub fn deterministic_policy_count(&self) -> f64 {
        (self.num_actions as f64).powi(self.num_states as i32)
    }
}

/// A single invariant violation found by [`validate_mdp`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonFinite { state: usize, action: usize },
    NegativeProbability {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    RowSum { state: usize, action: usize, sum: f64 },
    RewardOutOfRange {
        state: usize,
        action: usize,
        value: f64,
        range: RewardRange,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { state, action } => {
                write!(f, "non-finite entry at (s={state},a={action})")
            }
            Violation::NegativeProbability {
                state,
                action,
                next,
                value,
            } => write!(
                f,
                "negative probability {value} at (s={state},a={action},s'={next})"
            ),
            Violation::RowSum { state, action, sum } => {
                write!(f, "row (s={state},a={action}) sums to {sum}")
            }
            Violation::RewardOutOfRange {
                state,
                action,
                value,
                range,
            } => write!(
                f,
                "reward {value} at (s={state},a={action}) outside [{}, {}]",
                range.low, range.high
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Reports every kernel and reward invariant violation.
pub fn validate_mdp(mdp: &TabularMdp) -> ValidationReport {
    let mut violations = Vec::new();
    let range = mdp.reward_range();
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let row = mdp.transition_row(s, a);
            if row.iter().any(|p| !p.is_finite()) {
                violations.push(Violation::NonFinite {
                    state: s,
                    action: a,
                });
                continue;
            }
            for (next, &p) in row.iter().enumerate() {
                if p < 0.0 {
                    violations.push(Violation::NegativeProbability {
                        state: s,
                        action: a,
                        next,
                        value: p,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                violations.push(Violation::RowSum {
                    state: s,
                    action: a,
                    sum,
                });
            }
            let r = mdp.reward(s, a);
            if !r.is_finite() {
                violations.push(Violation::NonFinite {
                    state: s,
                    action: a,
                });
            } else if !range.contains(r) {
                violations.push(Violation::RewardOutOfRange {
                    state: s,
                    action: a,
                    value: r,
                    range,
                });
            }
        }
    }
    ValidationReport { violations }
}

/// Per-state probability vectors over actions, stored as an S×A matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        if probs.nrows() == 0 || probs.ncols() == 0 {
            return Err(Error::InvalidPolicy("empty policy".into()));
        }
        for (s, row) in probs.row_iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidPolicy(format!(
                    "state {s} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidPolicy(format!(
                    "state {s} probabilities sum to {sum}"
                )));
            }
        }
        Ok(Policy { probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let s = rows.len();
        let a = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != a) {
            return Err(Error::InvalidPolicy("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Policy::new(DMatrix::from_row_slice(s, a, &flat))
    }

    /// Wraps a matrix the caller guarantees to be row-stochastic (projection
    /// output, convex combinations of policies).
    pub(crate) fn from_matrix_unchecked(probs: DMatrix<f64>) -> Self {
        Policy { probs }
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Policy {
            probs: DMatrix::from_element(num_states, num_actions, 1.0 / num_actions as f64),
        }
    }

    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = DMatrix::zeros(actions.len(), num_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::ActionOutOfRange {
                    state: s,
                    action: a,
                    num_actions,
                });
            }
            probs[(s, a)] = 1.0;
        }
        Policy::new(probs)
    }

    /// Each row drawn uniformly from the simplex (Dirichlet(1,…,1)).
    pub fn random(num_states: usize, num_actions: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(POLICY_STREAM);
        Policy::random_with(num_states, num_actions, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(num_states: usize, num_actions: usize, rng: &mut R) -> Self {
        let mut probs = DMatrix::zeros(num_states, num_actions);
        for s in 0..num_states {
            let row = dirichlet_ones(rng, num_actions);
            for (a, p) in row.into_iter().enumerate() {
                probs[(s, a)] = p;
            }
        }
        Policy { probs }
    }

    /// Same action distribution in every state.
    pub fn state_constant(num_states: usize, row: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..num_states).map(|_| row.to_vec()).collect();
        Policy::from_rows(&rows)
    }

    pub fn num_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn num_actions(&self) -> usize {
        self.probs.ncols()
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.probs
    }

    pub fn min_entry(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(1-α)·self + α·other`.
    pub fn mix(&self, other: &Policy, alpha: f64) -> Result<Policy> {
        if self.probs.shape() != other.probs.shape() {
            return Err(Error::DimensionMismatch {
                what: "policy mix",
                expected: self.num_states() * self.num_actions(),
                found: other.num_states() * other.num_actions(),
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("mix weight {alpha} outside [0,1]")));
        }
        Ok(Policy {
            probs: &self.probs * (1.0 - alpha) + &other.probs * alpha,
        })
    }

    /// Actions with probability one, if the policy is deterministic.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        self.probs
            .row_iter()
            .map(|row| row.iter().position(|&p| p == 1.0))
            .collect()
    }

    /// Euclidean (Frobenius) distance.
    pub fn distance(&self, other: &Policy) -> f64 {
        (&self.probs - &other.probs).norm()
    }
}

/// Policy constructors accepted by [`make_policy`].
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind {
    Uniform,
    Deterministic(Vec<usize>),
    Random(u64),
}

pub fn make_policy(kind: &PolicyKind, num_states: usize, num_actions: usize) -> Result<Policy> {
    if num_states == 0 || num_actions == 0 {
        return Err(Error::InvalidArgument("empty policy dimensions".into()));
    }
    match kind {
        PolicyKind::Uniform => Ok(Policy::uniform(num_states, num_actions)),
        PolicyKind::Deterministic(actions) => {
            if actions.len() != num_states {
                return Err(Error::DimensionMismatch {
                    what: "deterministic action map",
                    expected: num_states,
                    found: actions.len(),
                });
            }
            Policy::deterministic(actions, num_actions)
        }
        PolicyKind::Random(seed) => Ok(Policy::random(num_states, num_actions, *seed)),
    }
}

/// `r^π(s) = Σ_a π(a|s) r(s,a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyReward {
    pub vector: DVector<f64>,
}

pub fn kernel_under_policy(mdp: &TabularMdp, pi: &Policy) -> Result<PolicyKernel> {
    mdp.check_policy(pi)?;
    Ok(PolicyKernel::new_unchecked(mdp.mix_kernel(pi.as_matrix())))
}

pub fn reward_under_policy(mdp: &TabularMdp, pi: &Policy) -> Result<PolicyReward> {
    mdp.check_policy(pi)?;
    Ok(PolicyReward {
        vector: mdp.mix_reward(pi.as_matrix()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum KernelFamily {
    /// Every row drawn uniformly from the simplex.
    DirichletUniform,
    /// Each action applies a random permutation of the states.
    PermutationDeterministic,
    /// `nonzeros` distinct successors per row with Dirichlet(1) weights.
    Sparse { nonzeros: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RewardFamily {
    /// Independent uniform draws over the reward range.
    UniformRange,
    /// Each entry is nonzero with probability `density`, uniform when nonzero.
    Sparse { density: f64 },
    /// Range endpoints alternating over actions, random phase per state.
    TwoLevel,
    /// `r(s,a) = base(s) + δ·noise(s,a)`; δ ∈ [0,1] scales the spread over actions.
    DiameterControlled { delta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpGeneratorSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub kernel_family: KernelFamily,
    pub reward_family: RewardFamily,
    pub seed: u64,
    #[serde(default)]
    pub reward_range: RewardRange,
}

impl MdpGeneratorSpec {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        kernel_family: KernelFamily,
        reward_family: RewardFamily,
        seed: u64,
    ) -> Self {
        MdpGeneratorSpec {
            num_states,
            num_actions,
            kernel_family,
            reward_family,
            seed,
            reward_range: RewardRange::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.num_actions == 0 {
            return Err(Error::InvalidArgument("sizes must be positive".into()));
        }
        if !(self.reward_range.low <= self.reward_range.high)
            || !self.reward_range.low.is_finite()
            || !self.reward_range.high.is_finite()
        {
            return Err(Error::InvalidArgument("bad reward range".into()));
        }
        if let KernelFamily::Sparse { nonzeros } = self.kernel_family {
            if nonzeros == 0 || nonzeros > self.num_states {
                return Err(Error::InvalidArgument(format!(
                    "sparse kernel needs 1..={} nonzeros, got {nonzeros}",
                    self.num_states
                )));
            }
        }
        match self.reward_family {
            RewardFamily::Sparse { density } if !(0.0..=1.0).contains(&density) => Err(
                Error::InvalidArgument(format!("reward density {density} outside [0,1]")),
            ),
            RewardFamily::DiameterControlled { delta } if !(0.0..=1.0).contains(&delta) => Err(
                Error::InvalidArgument(format!("reward diameter {delta} outside [0,1]")),
            ),
            _ => Ok(()),
        }
    }
}

/// Retry budget for kernel families that must come out irreducible.
pub const GENERATION_RETRIES: usize = 200;

/// Generates a valid MDP as a deterministic function of the spec.
pub fn generate_mdp(spec: &MdpGeneratorSpec) -> Result<TabularMdp> {
    spec.validate()?;
    let mut kernel_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    kernel_rng.set_stream(KERNEL_STREAM);
    let kernel = generate_kernel(spec, &mut kernel_rng)?;
    let mut reward_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    reward_rng.set_stream(REWARD_STREAM);
    let reward = generate_reward(spec, &mut reward_rng);
    Ok(TabularMdp::new(spec.num_states, spec.num_actions, kernel, reward)?
        .with_reward_range(spec.reward_range))
}

fn generate_kernel(spec: &MdpGeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let (s_n, a_n) = (spec.num_states, spec.num_actions);
    match spec.kernel_family {
        KernelFamily::DirichletUniform => {
            let mut kernel = Vec::with_capacity(s_n * a_n * s_n);
            for _ in 0..s_n * a_n {
                kernel.extend(dirichlet_ones(rng, s_n));
            }
            Ok(kernel)
        }
        KernelFamily::PermutationDeterministic => {
            for _ in 0..GENERATION_RETRIES {
                let mut kernel = vec![0.0; s_n * a_n * s_n];
                for a in 0..a_n {
                    let mut perm: Vec<usize> = (0..s_n).collect();
                    perm.shuffle(rng);
                    for (s, &next) in perm.iter().enumerate() {
                        kernel[(s * a_n + a) * s_n + next] = 1.0;
                    }
                }
                if uniform_chain_is_ergodic(s_n, a_n, &kernel) {
                    return Ok(kernel);
                }
            }
            Err(Error::Generation(format!(
                "no irreducible aperiodic permutation kernel after {GENERATION_RETRIES} attempts"
            )))
        }
        KernelFamily::Sparse { nonzeros } => {
            for _ in 0..GENERATION_RETRIES {
                let mut kernel = vec![0.0; s_n * a_n * s_n];
                for row in 0..s_n * a_n {
                    let support = rand::seq::index::sample(rng, s_n, nonzeros);
                    let weights = dirichlet_ones(rng, nonzeros);
                    for (j, w) in support.iter().zip(weights) {
                        kernel[row * s_n + j] = w;
                    }
                }
                if uniform_chain_is_ergodic(s_n, a_n, &kernel) {
                    return Ok(kernel);
                }
            }
            Err(Error::Generation(format!(
                "no irreducible aperiodic sparse kernel after {GENERATION_RETRIES} attempts"
            )))
        }
    }
}

fn uniform_chain_is_ergodic(s_n: usize, a_n: usize, kernel: &[f64]) -> bool {
    let mut m = DMatrix::zeros(s_n, s_n);
    for s in 0..s_n {
        for a in 0..a_n {
            for j in 0..s_n {
                m[(s, j)] += kernel[(s * a_n + a) * s_n + j] / a_n as f64;
            }
        }
    }
    let structure = chain_structure(&PolicyKernel::new_unchecked(m));
    structure.is_irreducible() && structure.period == 1
}

fn generate_reward(spec: &MdpGeneratorSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (s_n, a_n) = (spec.num_states, spec.num_actions);
    let range = spec.reward_range;
    let uniform = |rng: &mut ChaCha8Rng| range.low + (range.high - range.low) * rng.random::<f64>();
    match spec.reward_family {
        RewardFamily::UniformRange => (0..s_n * a_n).map(|_| uniform(rng)).collect(),
        RewardFamily::Sparse { density } => (0..s_n * a_n)
            .map(|_| {
                let on = rng.random::<f64>() < density;
                let value = uniform(rng);
                if on {
                    value
                } else {
                    0.0_f64.clamp(range.low, range.high)
                }
            })
            .collect(),
        RewardFamily::TwoLevel => {
            let mut reward = Vec::with_capacity(s_n * a_n);
            for _ in 0..s_n {
                let phase = rng.random_range(0..2usize);
                for a in 0..a_n {
                    reward.push(if (a + phase) % 2 == 0 {
                        range.high
                    } else {
                        range.low
                    });
                }
            }
            reward
        }
        RewardFamily::DiameterControlled { delta } => {
            // base and noise are always drawn so that δ only rescales.
            let half = range.half_width();
            let mut reward = Vec::with_capacity(s_n * a_n);
            for _ in 0..s_n {
                let base = range.mid() + (1.0 - delta) * half * (2.0 * rng.random::<f64>() - 1.0);
                for _ in 0..a_n {
                    let noise = 2.0 * rng.random::<f64>() - 1.0;
                    let r = base + delta * half * noise;
                    reward.push(r.clamp(range.low, range.high));
                }
            }
            reward
        }
    }
}

/// One draw from Dirichlet(1,…,1) via normalized exponentials.
pub(crate) fn dirichlet_ones<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter_mut().for_each(|x| *x /= total);
    } else {
        draws.iter_mut().for_each(|x| *x = 1.0 / n as f64);
    }
    draws
}

/// Builds a fresh seeded ChaCha8 generator for auxiliary searches.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_spec(s: usize, a: usize, seed: u64) -> MdpGeneratorSpec {
        MdpGeneratorSpec::new(
            s,
            a,
            KernelFamily::DirichletUniform,
            RewardFamily::UniformRange,
            seed,
        )
    }

    #[test]
    fn degenerate_single_state_mdp_is_valid() {
        let mdp = TabularMdp::new(1, 1, vec![1.0], vec![0.5]).unwrap();
        assert!(validate_mdp(&mdp).is_ok());
    }

    #[test]
    fn short_row_is_reported_with_index() {
        let mdp = TabularMdp::new(1, 1, vec![0.9], vec![0.0]).unwrap();
        let report = validate_mdp(&mdp);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.to_string(), "row (s=0,a=0) sums to 0.9");
    }

    #[test]
    fn reward_outside_range_is_reported() {
        let mdp = TabularMdp::new(2, 1, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 3.7]).unwrap();
        let report = validate_mdp(&mdp);
        assert_eq!(
            report.violations,
            vec![Violation::RewardOutOfRange {
                state: 1,
                action: 0,
                value: 3.7,
                range: RewardRange::SIGNED_UNIT
            }]
        );
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            TabularMdp::new(2, 2, vec![0.0; 7], vec![0.0; 4]),
            Err(Error::DimensionMismatch { what: "kernel", .. })
        ));
        assert!(TabularMdp::new(0, 1, vec![], vec![]).is_err());
    }

    #[test]
    fn policy_mixture_of_identical_actions_is_that_kernel() {
        let row = [0.2, 0.3, 0.5];
        let kernel: Vec<f64> = (0..3).flat_map(|_| (0..2).flat_map(|_| row)).collect();
        let mdp = TabularMdp::new(3, 2, kernel, vec![0.0; 6]).unwrap();
        let pi = Policy::random(3, 2, 11);
        let pk = kernel_under_policy(&mdp, &pi).unwrap();
        for s in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(pk.matrix[(s, j)], row[j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn deterministic_policy_selects_kernel_slice_and_reward_column() {
        let mdp = generate_mdp(&random_spec(3, 3, 5)).unwrap();
        let pi = Policy::deterministic(&[2, 0, 1], 3).unwrap();
        let pk = kernel_under_policy(&mdp, &pi).unwrap();
        let pr = reward_under_policy(&mdp, &pi).unwrap();
        for (s, &a) in [2usize, 0, 1].iter().enumerate() {
            for j in 0..3 {
                assert_eq!(pk.matrix[(s, j)], mdp.transition(s, a, j));
            }
            assert_eq!(pr.vector[s], mdp.reward(s, a));
        }
    }

    #[test]
    fn uniform_policy_matches_direct_summation() {
        let mdp = generate_mdp(&random_spec(2, 2, 9)).unwrap();
        let pi = Policy::uniform(2, 2);
        let pk = kernel_under_policy(&mdp, &pi).unwrap();
        for s in 0..2 {
            for j in 0..2 {
                let direct = 0.5 * mdp.transition(s, 0, j) + 0.5 * mdp.transition(s, 1, j);
                assert_abs_diff_eq!(pk.matrix[(s, j)], direct, epsilon = 1e-15);
            }
        }
        let mdp = generate_mdp(&random_spec(3, 2, 21)).unwrap();
        let pr = reward_under_policy(&mdp, &Policy::uniform(3, 2)).unwrap();
        for s in 0..3 {
            let direct = 0.5 * (mdp.reward(s, 0) + mdp.reward(s, 1));
            assert_abs_diff_eq!(pr.vector[s], direct, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_reward_gives_constant_policy_reward() {
        let mdp = TabularMdp::new(2, 2, vec![0.5; 8], vec![0.3; 4]).unwrap();
        let pr = reward_under_policy(&mdp, &Policy::random(2, 2, 1)).unwrap();
        for x in pr.vector.iter() {
            assert_abs_diff_eq!(*x, 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = random_spec(3, 3, 7);
        let a = generate_mdp(&spec).unwrap();
        let b = generate_mdp(&spec).unwrap();
        assert_eq!(a.kernel_flat(), b.kernel_flat());
        assert_eq!(a.reward_flat(), b.reward_flat());
    }

    #[test]
    fn default_sweep_sizes_are_accepted() {
        for (s, a) in [(3, 3), (10, 10), (40, 40), (60, 60)] {
            let mdp = generate_mdp(&random_spec(s, a, 1)).unwrap();
            assert!(validate_mdp(&mdp).is_ok());
        }
    }

    #[test]
    fn zero_diameter_reward_is_action_independent() {
        let mut spec = random_spec(4, 3, 2);
        spec.reward_family = RewardFamily::DiameterControlled { delta: 0.0 };
        let mdp = generate_mdp(&spec).unwrap();
        for s in 0..4 {
            let row = mdp.reward_row(s);
            assert!(row.iter().all(|r| *r == row[0]));
        }
    }

    #[test]
    fn diameter_only_changes_reward_not_kernel() {
        let mut spec = random_spec(4, 3, 2);
        spec.reward_family = RewardFamily::DiameterControlled { delta: 0.25 };
        let a = generate_mdp(&spec).unwrap();
        spec.reward_family = RewardFamily::DiameterControlled { delta: 1.0 };
        let b = generate_mdp(&spec).unwrap();
        assert_eq!(a.kernel_flat(), b.kernel_flat());
        assert_ne!(a.reward_flat(), b.reward_flat());
    }

    #[test]
    fn policy_constructors() {
        let u = make_policy(&PolicyKind::Uniform, 2, 2).unwrap();
        assert_eq!(u.as_matrix().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        let d = make_policy(&PolicyKind::Deterministic(vec![1, 0]), 2, 2).unwrap();
        assert_eq!(d.prob(0, 1), 1.0);
        assert_eq!(d.prob(1, 0), 1.0);
        assert_eq!(d.as_deterministic(), Some(vec![1, 0]));
        assert_eq!(
            make_policy(&PolicyKind::Random(3), 4, 3).unwrap(),
            make_policy(&PolicyKind::Random(3), 4, 3).unwrap()
        );
        assert!(matches!(
            make_policy(&PolicyKind::Deterministic(vec![0, 2]), 2, 2),
            Err(Error::ActionOutOfRange { state: 1, action: 2, .. })
        ));
    }

    #[test]
    fn random_policies_are_valid() {
        for seed in 0..50 {
            let pi = Policy::random(5, 4, seed);
            assert!(Policy::new(pi.as_matrix().clone()).is_ok());
        }
    }

    #[test]
    fn json_document_round_trip() {
        let mdp = generate_mdp(&random_spec(3, 2, 4)).unwrap();
        let text = serde_json::to_string(&mdp).unwrap();
        let back: TabularMdp = serde_json::from_str(&text).unwrap();
        assert_eq!(mdp, back);
        let bad = r#"{"num_states":2,"num_actions":1,"kernel":[1.0],"reward":[0.0,0.0]}"#;
        assert!(serde_json::from_str::<TabularMdp>(bad).is_err());
    }
}
