//! MDP complexity constants `C_m, C_p, C_r, κ_r`, the restricted
//! Lipschitz/smoothness constants built from them, the gradient-domination
//! constant `C_PL`, and mixing parameters `(C_e, λ)`.
//!
//! Matrix norms are ∞-operator norms throughout. Each value carries a
//! [`Provenance`] saying whether it is exact, a certified upper bound, a
//! search lower bound, or an envelope built from sampled policies.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{
    chain_structure, ergodicity_estimate, phi_times, resolvent, stationary_distribution,
};
use crate::error::{Error, Result};
use crate::evaluator::average_reward;
use crate::gradient::{policy_gradient, step_policy, Direction};
use crate::linalg::inf_norm;
use crate::mdp::{kernel_under_policy, seeded_rng, Policy, TabularMdp};
use crate::oracle::DeterministicPolicies;

pub const DEFAULT_ENUMERATION_CAP: usize = 4096;
/// Sign vectors are enumerated exhaustively up to this many states.
pub const SIGN_ENUMERATION_MAX_STATES: usize = 16;
/// Stationary probabilities below this are reported as degenerate.
pub const DEGENERATE_STATIONARY: f64 = 1e-14;
const ERGODICITY_HORIZON: usize = 100;
const ERGODICITY_SAMPLES: usize = 32;
/// Relative slack before a random probe is said to beat enumeration.
const PROBE_SLACK: f64 = 1e-12;

const CP_STREAM: u64 = 100;
const CM_STREAM: u64 = 10;
const CPL_STREAM: u64 = 11;
const SMOOTHNESS_STREAM: u64 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    UpperBound,
    SearchLowerBound,
    /// Built from `(C_e, λ)` maxima over sampled policies, not all of Π.
    SampledEnvelope,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::UpperBound => "upper-bound",
            Provenance::SearchLowerBound => "search-lower-bound",
            Provenance::SampledEnvelope => "sampled-envelope",
        }
    }

    /// Provenance of a quantity computed from inputs of the given kinds.
    pub fn combine(parts: &[Provenance]) -> Provenance {
        if parts.contains(&Provenance::SearchLowerBound) {
            Provenance::SearchLowerBound
        } else if parts.contains(&Provenance::SampledEnvelope) {
            Provenance::SampledEnvelope
        } else if parts.contains(&Provenance::UpperBound) {
            Provenance::UpperBound
        } else {
            Provenance::Exact
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub provenance: Provenance,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            provenance: Provenance::Exact,
        }
    }

    fn new(value: f64, provenance: Provenance) -> Self {
        Estimate { value, provenance }
    }
}

/// Search effort. Searches consume a fixed seeded sequence of candidates,
/// so a larger budget evaluates a superset and never returns less.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub evaluations: usize,
    pub seed: u64,
    /// Enumerate all deterministic policies when `A^S` is at most this.
    pub enumeration_cap: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            evaluations: 2000,
            seed: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl SearchBudget {
    pub fn new(evaluations: usize, seed: u64) -> Self {
        SearchBudget {
            evaluations,
            seed,
            ..SearchBudget::default()
        }
    }

    fn enumerates(&self, mdp: &TabularMdp) -> bool {
        mdp.deterministic_policy_count() <= self.enumeration_cap as f64
    }
}

/// `√A`, the policy-independent bound on both `C_p` and `C_r`.
pub fn sqrt_a_certificate(mdp: &TabularMdp) -> f64 {
    (mdp.num_actions() as f64).sqrt()
}

/// `κ_r = max_π ‖Φr^π‖_∞`, exactly.
///
/// `(Φr^π)(s)` is linear in π and separable over states, so for each target
/// state and sign the maximizer picks an extreme action in every state.
pub fn kappa_r(mdp: &TabularMdp) -> f64 {
    let n = mdp.num_states();
    let inv = 1.0 / n as f64;
    let hi: Vec<f64> = (0..n)
        .map(|s| mdp.reward_row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let lo: Vec<f64> = (0..n)
        .map(|s| mdp.reward_row(s).iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let (sum_hi, sum_lo): (f64, f64) = (hi.iter().sum(), lo.iter().sum());
    let mut best: f64 = 0.0;
    for s in 0..n {
        let up = (1.0 - inv) * hi[s] - inv * (sum_lo - lo[s]);
        let down = -(1.0 - inv) * lo[s] + inv * (sum_hi - hi[s]);
        best = best.max(up).max(down);
    }
    best
}

/// `C_r = max_{π,π'} ‖r^{π'} − r^π‖_∞ / ‖π' − π‖₂`.
///
/// Concentrating `π' − π` on one state is optimal, and on one state the
/// ratio is maximized along the centered reward row, so
/// `C_r = max_s ‖r_s − mean(r_s)𝟙‖₂`. With `restrict_state_constant` the
/// pair is limited to policies equal in every state, which divides by √S.
pub fn c_r_estimate(mdp: &TabularMdp, restrict_state_constant: bool) -> Estimate {
    let best = (0..mdp.num_states())
        .map(|s| centered_norm(mdp.reward_row(s)))
        .fold(0.0, f64::max);
    restricted(best, mdp.num_states(), restrict_state_constant)
}

fn restricted(value: f64, num_states: usize, restrict: bool) -> Estimate {
    if restrict && num_states > 1 {
        Estimate::new(value / (num_states as f64).sqrt(), Provenance::SearchLowerBound)
    } else {
        Estimate::exact(value)
    }
}

fn centered_norm(row: &[f64]) -> f64 {
    let mean = row.iter().sum::<f64>() / row.len() as f64;
    row.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt()
}

/// `C_p = max_{π,π'} ‖P^{π'} − P^π‖_∞ / ‖π' − π‖₂`.
///
/// Per state, `max_u ‖P_sᵀu‖₁/‖u‖₂ = max_{v∈{±1}^S} ‖Φ_A P_s v‖₂`, where
/// `P_s` is the A×S block of state s. The sign vectors are enumerated for
/// `S ≤ 16` (exact) and searched by restarted single-flip ascent otherwise.
pub fn c_p_estimate(
    mdp: &TabularMdp,
    budget: &SearchBudget,
    restrict_state_constant: bool,
) -> Estimate {
    let n = mdp.num_states();
    let exact = n <= SIGN_ENUMERATION_MAX_STATES;
    let restarts = (budget.evaluations / n.max(1)).max(1);
    let mut best: f64 = 0.0;
    for s in 0..n {
        let block = phi_times(&mdp.state_block(s));
        let value = if exact {
            max_sign_norm_exhaustive(&block)
        } else {
            let mut rng = seeded_rng(budget.seed, CP_STREAM + s as u64);
            max_sign_norm_search(&block, restarts, &mut rng)
        };
        best = best.max(value);
    }
    let mut out = restricted(best, n, restrict_state_constant);
    if !exact {
        out.provenance = Provenance::SearchLowerBound;
    }
    out
}

/// `max_{v∈{±1}^n} ‖Bv‖₂` by Gray-code enumeration (v and −v coincide).
fn max_sign_norm_exhaustive(b: &DMatrix<f64>) -> f64 {
    let n = b.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0; n];
    let mut bv: DVector<f64> = b.column_sum();
    let mut best = bv.norm();
    for i in 1u64..(1u64 << (n - 1)) {
        let j = i.trailing_zeros() as usize;
        v[j] = -v[j];
        bv.axpy(2.0 * v[j], &b.column(j), 1.0);
        best = best.max(bv.norm());
    }
    best
}

fn max_sign_norm_search<R: Rng>(b: &DMatrix<f64>, restarts: usize, rng: &mut R) -> f64 {
    let n = b.ncols();
    let col_sq: Vec<f64> = (0..n).map(|j| b.column(j).norm_squared()).collect();
    let mut best: f64 = 0.0;
    for r in 0..restarts {
        let mut v: Vec<f64> = if r == 0 {
            (0..n)
                .map(|j| if b.column(j).sum() >= 0.0 { 1.0 } else { -1.0 })
                .collect()
        } else {
            (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect()
        };
        let mut bv = b * DVector::from_column_slice(&v);
        loop {
            let mut improved = false;
            for j in 0..n {
                // ‖Bv − 2v_j b_j‖² − ‖Bv‖²
                let delta = 4.0 * col_sq[j] - 4.0 * v[j] * b.column(j).dot(&bv);
                if delta > 1e-15 {
                    bv.axpy(-2.0 * v[j], &b.column(j), 1.0);
                    v[j] = -v[j];
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        best = best.max(bv.norm());
    }
    best
}

/// Result of the `C_m` search with the mixing parameters gathered on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct CmEstimate {
    /// Largest `‖(I − ΦP^π)⁻¹‖_∞` over visited policies.
    pub estimate: Estimate,
    /// Largest `C_e` and λ over the policies whose mixing was measured.
    pub c_e: f64,
    pub lambda: f64,
    /// `2C_e·S/(1−λ)`.
    pub envelope: f64,
    /// `max ½‖P(·|s,a) − P(·|s',a')‖₁` over `s ≠ s'`, all action pairs.
    pub dobrushin: f64,
    /// A bound valid for every policy when `dobrushin < 1`, else the envelope.
    pub certified: Estimate,
    pub skipped_non_ergodic: usize,
    pub evaluations: usize,
}

/// Dobrushin coefficient maximized over all policies. `½‖P^π_i − P^π_j‖₁`
/// is convex in the pair of rows, so the maximum sits at action vertices.
pub fn worst_case_dobrushin(mdp: &TabularMdp) -> f64 {
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let mut best: f64 = 0.0;
    for i in 0..s_n {
        for j in i + 1..s_n {
            for a in 0..a_n {
                let pi = mdp.transition_row(i, a);
                for b in 0..a_n {
                    let pj = mdp.transition_row(j, b);
                    let tv: f64 = pi.iter().zip(pj).map(|(x, y)| (x - y).abs()).sum();
                    best = best.max(0.5 * tv);
                }
            }
        }
    }
    best
}

/// `1 + 4(1 − 1/S)τ/(1 − τ)` bounds `‖(I − ΦP^π)⁻¹‖_∞` for every π whose
/// kernel has Dobrushin coefficient at most τ < 1.
pub fn dobrushin_resolvent_bound(num_states: usize, tau: f64) -> f64 {
    1.0 + 4.0 * (1.0 - 1.0 / num_states as f64) * tau / (1.0 - tau)
}

/// Seeded candidate stream shared by the `C_m` and `C_PL` searches: random
/// vertices, random interior points, and perturbations of the incumbent.
struct CandidateStream<R> {
    rng: R,
    num_states: usize,
    num_actions: usize,
    step: usize,
}

impl<R: Rng> CandidateStream<R> {
    fn new(rng: R, num_states: usize, num_actions: usize) -> Self {
        CandidateStream {
            rng,
            num_states,
            num_actions,
            step: 0,
        }
    }

    fn next(&mut self, incumbent: Option<&Policy>) -> Policy {
        self.step += 1;
        let (s_n, a_n) = (self.num_states, self.num_actions);
        match (self.step % 3, incumbent) {
            (0, Some(best)) => {
                let target = Policy::random_with(s_n, a_n, &mut self.rng);
                let alpha = 0.3 * self.rng.random::<f64>();
                best.mix(&target, alpha).unwrap_or_else(|_| best.clone())
            }
            (1, _) => {
                let actions: Vec<usize> =
                    (0..s_n).map(|_| self.rng.random_range(0..a_n)).collect();
                Policy::deterministic(&actions, a_n).expect("actions in range")
            }
            _ => Policy::random_with(s_n, a_n, &mut self.rng),
        }
    }
}

pub fn c_m_estimate(mdp: &TabularMdp, budget: &SearchBudget) -> Result<CmEstimate> {
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let mut best: f64 = 0.0;
    let mut best_policy: Option<Policy> = None;
    let mut skipped = 0;
    let mut evaluations = 0;
    let mut measured = 0;
    let (mut c_e, mut lambda): (f64, f64) = (0.0, 0.0);

    let mut visit = |pi: &Policy,
                     best: &mut f64,
                     best_policy: &mut Option<Policy>|
     -> Result<bool> {
        let pk = kernel_under_policy(mdp, pi)?;
        if !chain_structure(&pk).is_ergodic() {
            return Ok(false);
        }
        let norm = inf_norm(&resolvent(&pk)?.matrix);
        let record = norm > *best;
        if record {
            *best = norm;
            *best_policy = Some(pi.clone());
        }
        if record || measured < ERGODICITY_SAMPLES {
            measured += 1;
            let est = ergodicity_estimate(&pk, ERGODICITY_HORIZON)?;
            c_e = c_e.max(est.c_e);
            lambda = lambda.max(est.lambda);
        }
        Ok(true)
    };

    let exhaustive = budget.enumerates(mdp);
    let mut enumerated_max = None;
    if exhaustive {
        for actions in DeterministicPolicies::new(s_n, a_n) {
            let pi = Policy::deterministic(&actions, a_n)?;
            evaluations += 1;
            if !visit(&pi, &mut best, &mut best_policy)? {
                skipped += 1;
            }
        }
        enumerated_max = Some(best);
    }
    let mut stream = CandidateStream::new(seeded_rng(budget.seed, CM_STREAM), s_n, a_n);
    for _ in 0..budget.evaluations {
        let pi = stream.next(best_policy.as_ref());
        evaluations += 1;
        if !visit(&pi, &mut best, &mut best_policy)? {
            skipped += 1;
        }
    }
    if best_policy.is_none() {
        return Err(Error::NotErgodic(
            "no sampled policy induces an ergodic chain".into(),
        ));
    }
    let provenance = match enumerated_max {
        Some(m) if best <= m * (1.0 + PROBE_SLACK) => Provenance::Exact,
        _ => Provenance::SearchLowerBound,
    };
    let envelope = 2.0 * c_e * s_n as f64 / (1.0 - lambda);
    let dobrushin = worst_case_dobrushin(mdp);
    let certified = if dobrushin < 1.0 {
        Estimate::new(
            dobrushin_resolvent_bound(s_n, dobrushin).max(best),
            Provenance::UpperBound,
        )
    } else {
        Estimate::new(envelope.max(best), Provenance::SampledEnvelope)
    };
    Ok(CmEstimate {
        estimate: Estimate::new(best, provenance),
        c_e,
        lambda,
        envelope,
        dobrushin,
        certified,
        skipped_non_ergodic: skipped,
        evaluations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CplEstimate {
    pub estimate: Estimate,
    /// `max_s d^{π*}(s) / min_{s',a} P(s|s',a)`, valid for every policy
    /// when every state is reachable in one step from everywhere.
    pub minorization_bound: Option<f64>,
    pub degenerate: usize,
    pub skipped_non_ergodic: usize,
    pub evaluations: usize,
}

/// `C_PL = max_{π,s} d^{π*}(s)/d^π(s)`, searched over deterministic policies
/// (all of them when `A^S` is within the enumeration cap) and random probes.
/// An enumerated maximum is labeled exact only if ten times the budget in
/// random probes finds nothing larger.
pub fn c_pl_estimate(mdp: &TabularMdp, pi_star: &Policy, budget: &SearchBudget) -> Result<CplEstimate> {
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let d_star = stationary_distribution(&kernel_under_policy(mdp, pi_star)?)?.probs;
    let mut best: f64 = 0.0;
    let mut best_policy: Option<Policy> = None;
    let (mut degenerate, mut skipped, mut evaluations) = (0, 0, 0);

    let mut visit = |pi: &Policy, best: &mut f64, best_policy: &mut Option<Policy>| -> Result<()> {
        evaluations += 1;
        let pk = kernel_under_policy(mdp, pi)?;
        if !chain_structure(&pk).is_ergodic() {
            skipped += 1;
            return Ok(());
        }
        let d = stationary_distribution(&pk)?.probs;
        if d.min() < DEGENERATE_STATIONARY {
            degenerate += 1;
            return Ok(());
        }
        let ratio = d_star.component_div(&d).max();
        if ratio > *best {
            *best = ratio;
            *best_policy = Some(pi.clone());
        }
        Ok(())
    };

    let exhaustive = budget.enumerates(mdp);
    let mut enumerated_max = None;
    let probes = if exhaustive {
        for actions in DeterministicPolicies::new(s_n, a_n) {
            visit(&Policy::deterministic(&actions, a_n)?, &mut best, &mut best_policy)?;
        }
        enumerated_max = Some(best);
        10 * budget.evaluations
    } else {
        budget.evaluations
    };
    let mut stream = CandidateStream::new(seeded_rng(budget.seed, CPL_STREAM), s_n, a_n);
    for _ in 0..probes {
        let pi = stream.next(best_policy.as_ref());
        visit(&pi, &mut best, &mut best_policy)?;
    }
    if best_policy.is_none() {
        return Err(Error::NotErgodic(
            "no sampled policy has a usable stationary distribution".into(),
        ));
    }
    let provenance = match enumerated_max {
        Some(m) if best <= m * (1.0 + PROBE_SLACK) => Provenance::Exact,
        _ => Provenance::SearchLowerBound,
    };
    let minorization_bound = (0..s_n)
        .map(|s| {
            let floor = (0..s_n)
                .flat_map(|i| (0..a_n).map(move |a| (i, a)))
                .map(|(i, a)| mdp.transition(i, a, s))
                .fold(f64::INFINITY, f64::min);
            (floor > 0.0).then(|| d_star[s] / floor)
        })
        .try_fold(0.0f64, |acc, x| x.map(|v| acc.max(v)));
    Ok(CplEstimate {
        estimate: Estimate::new(best, provenance),
        minorization_bound,
        degenerate,
        skipped_non_ergodic: skipped,
        evaluations,
    })
}

/// `L₁ = 2(C_r + C_pC_mκ_r + 2(C_m²C_pκ_r + C_mC_r))`.
pub fn lipschitz_l1(c_m: f64, c_p: f64, c_r: f64, kappa: f64) -> f64 {
    2.0 * (c_r + c_p * c_m * kappa + 2.0 * (c_m * c_m * c_p * kappa + c_m * c_r))
}

/// `L₂ = 4(C_p²C_m²κ_r + C_pC_mC_r + (C_p+1)(C_m²C_pκ_r + C_mC_r)
/// + 4(C_m³C_p²κ_r + C_m²C_pC_r))`.
pub fn smoothness_l2(c_m: f64, c_p: f64, c_r: f64, kappa: f64) -> f64 {
    let m2 = c_m * c_m;
    let m3 = m2 * c_m;
    4.0 * (c_p * c_p * m2 * kappa
        + c_p * c_m * c_r
        + (c_p + 1.0) * (m2 * c_p * kappa + c_m * c_r)
        + 4.0 * (m3 * c_p * c_p * kappa + m2 * c_p * c_r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityConstants {
    pub c_m: Estimate,
    pub c_p: Estimate,
    pub c_r: Estimate,
    pub kappa_r: Estimate,
    /// Provenance of L₁ and L₂ describes their inputs; the formulas
    /// themselves are upper bounds on the true restricted constants.
    pub l1: Estimate,
    pub l2: Estimate,
    pub c_pl: Option<Estimate>,
    pub c_e: Estimate,
    pub lambda: Estimate,
}

impl ComplexityConstants {
    fn assemble(
        c_m: Estimate,
        c_p: Estimate,
        c_r: Estimate,
        kappa_r: Estimate,
        c_pl: Option<Estimate>,
        c_e: Estimate,
        lambda: Estimate,
    ) -> Self {
        let inputs = [c_m.provenance, c_p.provenance, c_r.provenance, kappa_r.provenance];
        let prov = Provenance::combine(&inputs);
        ComplexityConstants {
            l1: Estimate::new(lipschitz_l1(c_m.value, c_p.value, c_r.value, kappa_r.value), prov),
            l2: Estimate::new(smoothness_l2(c_m.value, c_p.value, c_r.value, kappa_r.value), prov),
            c_m,
            c_p,
            c_r,
            kappa_r,
            c_pl,
            c_e,
            lambda,
        }
    }

    /// `1/L₂`, or 1 when `L₂ = 0` (every policy is optimal).
    pub fn inverse_smoothness_step(&self) -> f64 {
        if self.l2.value > 0.0 {
            1.0 / self.l2.value
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsReport {
    /// Constants as found by search, plugged into the formulas.
    pub search: ComplexityConstants,
    /// Constants replaced by bounds valid over all of Π where the search
    /// is not exact.
    pub certified: ComplexityConstants,
    pub c_m_detail: CmEstimate,
    pub c_pl_detail: Option<CplEstimate>,
    pub evaluations: usize,
}

/// Runs every estimator and assembles both flavors. `C_PL` needs an
/// optimal policy and is omitted without one.
pub fn assemble_constants(
    mdp: &TabularMdp,
    budget: &SearchBudget,
    pi_star: Option<&Policy>,
) -> Result<ConstantsReport> {
    let kappa = Estimate::exact(kappa_r(mdp));
    let c_r = c_r_estimate(mdp, false);
    let c_p = c_p_estimate(mdp, budget, false);
    let cm = c_m_estimate(mdp, budget)?;
    let cpl = pi_star.map(|p| c_pl_estimate(mdp, p, budget)).transpose()?;
    let sampled = Provenance::SearchLowerBound;
    let c_e = Estimate::new(cm.c_e, sampled);
    let lambda = Estimate::new(cm.lambda, sampled);

    let search = ComplexityConstants::assemble(
        cm.estimate,
        c_p,
        c_r,
        kappa,
        cpl.as_ref().map(|c| c.estimate),
        c_e,
        lambda,
    );

    let sqrt_a = sqrt_a_certificate(mdp);
    let certify = |e: Estimate| match e.provenance {
        Provenance::Exact => e,
        _ => Estimate::new(sqrt_a, Provenance::UpperBound),
    };
    let certified_cpl = cpl.as_ref().map(|c| match (c.estimate.provenance, c.minorization_bound) {
        (Provenance::Exact, _) => c.estimate,
        (_, Some(bound)) => Estimate::new(bound.max(c.estimate.value), Provenance::UpperBound),
        (_, None) => c.estimate,
    });
    let certified = ComplexityConstants::assemble(
        cm.certified,
        certify(c_p),
        certify(c_r),
        kappa,
        certified_cpl,
        c_e,
        lambda,
    );
    let evaluations = cm.evaluations + cpl.as_ref().map_or(0, |c| c.evaluations);
    Ok(ConstantsReport {
        search,
        certified,
        c_m_detail: cm,
        c_pl_detail: cpl,
        evaluations,
    })
}

/// Largest observed `2|ρ^{π+αu} − ρ^π − α⟨∇ρ^π, u⟩| / (α²‖u‖₂²)` over
/// seeded samples with `u = π' − π` and α ∈ {1, 0.1, 0.01}. By Taylor's
/// theorem each sample is a lower bound on the restricted smoothness.
pub fn empirical_smoothness(mdp: &TabularMdp, samples: usize, seed: u64) -> Result<f64> {
    const ALPHAS: [f64; 3] = [1.0, 0.1, 0.01];
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let mut rng = seeded_rng(seed, SMOOTHNESS_STREAM);
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let pi = Policy::random_with(s_n, a_n, &mut rng);
        let target = if i % 2 == 0 {
            let actions: Vec<usize> = (0..s_n).map(|_| rng.random_range(0..a_n)).collect();
            Policy::deterministic(&actions, a_n)?
        } else {
            Policy::random_with(s_n, a_n, &mut rng)
        };
        let u = Direction::between(&pi, &target)?;
        let norm_sq = u.norm().powi(2);
        if norm_sq < 1e-12 {
            continue;
        }
        let alpha = ALPHAS[i % ALPHAS.len()];
        let g = match policy_gradient(mdp, &pi) {
            Ok(g) => g,
            Err(Error::NotErgodic(_)) | Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        };
        let rho0 = average_reward(mdp, &pi)?.value;
        let moved = step_policy(&pi, &u, alpha)?;
        let rho1 = match average_reward(mdp, &moved) {
            Ok(r) => r.value,
            Err(Error::NotErgodic(_)) | Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        };
        let curvature = 2.0 * (rho1 - rho0 - alpha * g.dot(&u)).abs() / (alpha * alpha * norm_sq);
        best = best.max(curvature);
    }
    Ok(best)
}
