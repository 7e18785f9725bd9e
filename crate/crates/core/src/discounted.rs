//! Discounted-reward counterpart: values, occupancy measures, the discounted
//! projected ascent with its classical step size and bound, and the
//! vanishing-discount link `ρ^π = lim_{γ→1}(1−γ)·μᵀV_γ^π`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complexity::{c_p_estimate, c_r_estimate, kappa_r, smoothness_l2, SearchBudget};
use crate::error::{Error, Result};
use crate::evaluator::evaluate;
use crate::linalg::{inf_norm, inverse, solve};
use crate::mdp::{kernel_under_policy, reward_under_policy, seeded_rng, Policy, TabularMdp};
use crate::optimizer::{run_with_gradient, RunConfig, RunTrace, StepSize};
use crate::oracle::DeterministicPolicies;

const POLICY_ITERATION_CAP: usize = 10_000;
/// Tolerance on the inverse computed for the resolvent norm.
const RESOLVENT_TOL: f64 = 1e-8;
const CM_HAT_STREAM: u64 = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscountedValue {
    pub gamma: f64,
    pub mu: DVector<f64>,
    /// `μᵀV`.
    pub value: f64,
    pub state_values: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMeasure {
    pub d: DVector<f64>,
}

pub fn uniform_initial(num_states: usize) -> DVector<f64> {
    DVector::from_element(num_states, 1.0 / num_states as f64)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("discount {gamma} must lie in (0, 1)")))
    }
}

fn check_mu(mdp: &TabularMdp, mu: &DVector<f64>) -> Result<()> {
    if mu.len() != mdp.num_states() {
        return Err(Error::DimensionMismatch {
            what: "initial distribution",
            expected: mdp.num_states(),
            found: mu.len(),
        });
    }
    if mu.iter().any(|&x| !(x >= 0.0)) || (mu.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(
            "initial distribution must be nonnegative and sum to 1".into(),
        ));
    }
    Ok(())
}

fn discounted_system(p: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    DMatrix::identity(p.nrows(), p.ncols()) - p * gamma
}

/// Solves `(I − γP^π)V = r^π` and returns `μᵀV`.
pub fn discounted_value(
    mdp: &TabularMdp,
    pi: &Policy,
    gamma: f64,
    mu: &DVector<f64>,
) -> Result<DiscountedValue> {
    check_gamma(gamma)?;
    check_mu(mdp, mu)?;
    let p = kernel_under_policy(mdp, pi)?.matrix;
    let r = reward_under_policy(mdp, pi)?.vector;
    let state_values = solve(&discounted_system(&p, gamma), &r, "discounted value")?;
    Ok(DiscountedValue {
        gamma,
        mu: mu.clone(),
        value: mu.dot(&state_values),
        state_values,
    })
}

/// `d = (1−γ)μᵀ(I − γP^π)⁻¹`.
pub fn occupancy_measure(
    mdp: &TabularMdp,
    pi: &Policy,
    gamma: f64,
    mu: &DVector<f64>,
) -> Result<OccupancyMeasure> {
    check_gamma(gamma)?;
    check_mu(mdp, mu)?;
    let p = kernel_under_policy(mdp, pi)?.matrix;
    let d = solve(&discounted_system(&p, gamma).transpose(), mu, "occupancy measure")?;
    Ok(OccupancyMeasure { d: d * (1.0 - gamma) })
}

/// `Q_γ(s,a) = r(s,a) + γ Σ_{s'} P(s'|s,a)V(s')`.
pub fn discounted_q(mdp: &TabularMdp, v: &DVector<f64>, gamma: f64) -> DMatrix<f64> {
    DMatrix::from_fn(mdp.num_states(), mdp.num_actions(), |s, a| {
        let next: f64 = mdp
            .transition_row(s, a)
            .iter()
            .zip(v.iter())
            .map(|(p, x)| p * x)
            .sum();
        mdp.reward(s, a) + gamma * next
    })
}

/// `∂(μᵀV)/∂π(a|s) = d(s)·Q_γ(s,a)/(1−γ)`.
pub fn discounted_gradient(
    mdp: &TabularMdp,
    pi: &Policy,
    gamma: f64,
    mu: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    Ok(value_and_gradient(mdp, pi, gamma, mu)?.1)
}

fn value_and_gradient(
    mdp: &TabularMdp,
    pi: &Policy,
    gamma: f64,
    mu: &DVector<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    let value = discounted_value(mdp, pi, gamma, mu)?;
    let occ = occupancy_measure(mdp, pi, gamma, mu)?;
    let mut grad = discounted_q(mdp, &value.state_values, gamma);
    for (s, mut row) in grad.row_iter_mut().enumerate() {
        row *= occ.d[s] / (1.0 - gamma);
    }
    Ok((value.value, grad))
}

/// Discounted optimum by policy iteration (lowest action index on ties;
/// a state switches action only on strict improvement).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscountedOptimum {
    pub pi_star: Policy,
    pub actions: Vec<usize>,
    pub state_values: DVector<f64>,
    pub iterations: usize,
}

pub fn discounted_optimum(mdp: &TabularMdp, gamma: f64) -> Result<DiscountedOptimum> {
    check_gamma(gamma)?;
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let mu = uniform_initial(s_n);
    let mut actions = vec![0; s_n];
    for iteration in 1..=POLICY_ITERATION_CAP {
        let pi = Policy::deterministic(&actions, a_n)?;
        let v = discounted_value(mdp, &pi, gamma, &mu)?.state_values;
        let q = discounted_q(mdp, &v, gamma);
        let mut changed = false;
        for s in 0..s_n {
            let mut best = actions[s];
            for a in 0..a_n {
                if q[(s, a)] > q[(s, best)] + 1e-12 * (1.0 + q[(s, best)].abs()) {
                    best = a;
                }
            }
            if best != actions[s] {
                actions[s] = best;
                changed = true;
            }
        }
        if !changed {
            return Ok(DiscountedOptimum {
                pi_star: pi,
                actions,
                state_values: v,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "policy iteration exceeded {POLICY_ITERATION_CAP} sweeps"
    )))
}

/// `(1−γ)³/(2γA)`.
pub fn discounted_step_size(gamma: f64, num_actions: usize) -> f64 {
    (1.0 - gamma).powi(3) / (2.0 * gamma * num_actions as f64)
}

/// `128·S·A/(k(1−γ)⁵)·mismatch²` for iterate k ≥ 1.
pub fn discounted_bound(k: usize, num_states: usize, num_actions: usize, gamma: f64, mismatch: f64) -> f64 {
    128.0 * (num_states * num_actions) as f64 / (k as f64 * (1.0 - gamma).powi(5)) * mismatch * mismatch
}

/// `‖d_μ^{π*}/μ‖_∞`, infinite when μ misses a state the optimum visits.
pub fn distribution_mismatch(d_star: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    d_star
        .iter()
        .zip(mu.iter())
        .map(|(&d, &m)| {
            if m > 0.0 {
                d / m
            } else if d > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscountedRun {
    pub gamma: f64,
    pub eta: f64,
    pub optimal_value: f64,
    pub mismatch: f64,
    /// `rho` holds `μᵀV^{π_k}` and `gap` the discounted suboptimality.
    pub trace: RunTrace,
    /// Bound on each recorded iterate's gap; absent at k = 0.
    pub bounds: Vec<Option<f64>>,
}

impl DiscountedRun {
    pub fn violations(&self) -> usize {
        self.trace
            .records
            .iter()
            .zip(&self.bounds)
            .filter(|(r, b)| matches!((r.gap, b), (Some(g), Some(b)) if g > *b + 1e-10))
            .count()
    }
}

pub fn run_discounted_pga(
    mdp: &TabularMdp,
    pi0: &Policy,
    gamma: f64,
    mu: &DVector<f64>,
    iters: usize,
) -> Result<DiscountedRun> {
    check_gamma(gamma)?;
    check_mu(mdp, mu)?;
    mdp.check_policy(pi0)?;
    let opt = discounted_optimum(mdp, gamma)?;
    let optimal_value = mu.dot(&opt.state_values);
    let d_star = occupancy_measure(mdp, &opt.pi_star, gamma, mu)?.d;
    let mismatch = distribution_mismatch(&d_star, mu);
    let eta = discounted_step_size(gamma, mdp.num_actions());
    let config = RunConfig {
        step_size: StepSize::Fixed(eta),
        max_iters: iters,
        ..RunConfig::default()
    };
    config.validate()?;
    let trace = run_with_gradient(pi0, eta, &config, Some(optimal_value), None, |pi| {
        value_and_gradient(mdp, pi, gamma, mu)
    })?;
    let bounds = trace
        .records
        .iter()
        .map(|r| {
            (r.iter >= 1).then(|| {
                discounted_bound(r.iter, mdp.num_states(), mdp.num_actions(), gamma, mismatch)
            })
        })
        .collect();
    Ok(DiscountedRun {
        gamma,
        eta,
        optimal_value,
        mismatch,
        trace,
        bounds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingDiscountRow {
    pub gamma: f64,
    pub scaled_value: f64,
    pub rho: f64,
    pub error: f64,
}

/// `(γ, (1−γ)μᵀV_γ^π, ρ^π, |difference|)` for each γ.
pub fn vanishing_discount_check(
    mdp: &TabularMdp,
    pi: &Policy,
    mu: &DVector<f64>,
    gammas: &[f64],
) -> Result<Vec<VanishingDiscountRow>> {
    let rho = evaluate(mdp, pi)?.rho;
    gammas
        .iter()
        .map(|&gamma| {
            let scaled_value = (1.0 - gamma) * discounted_value(mdp, pi, gamma, mu)?.value;
            Ok(VanishingDiscountRow {
                gamma,
                scaled_value,
                rho,
                error: (scaled_value - rho).abs(),
            })
        })
        .collect()
}

/// `γ_j = 1 − 2^{−j}` for j = 1..=n.
pub fn halving_discounts(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscountedConstants {
    pub gamma: f64,
    /// Largest `‖(I − γP^π)⁻¹‖_∞` over the probed policies.
    pub c_m_hat: f64,
    pub c_m_hat_bound: f64,
    pub c_p: f64,
    pub c_r: f64,
    pub kappa_r: f64,
    /// The smoothness formula with `Ĉ_m` in place of `C_m`.
    pub l2: f64,
}

pub fn discounted_smoothness_constants(
    mdp: &TabularMdp,
    gamma: f64,
    budget: &SearchBudget,
) -> Result<DiscountedConstants> {
    check_gamma(gamma)?;
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let norm = |pi: &Policy| -> Result<f64> {
        let p = kernel_under_policy(mdp, pi)?.matrix;
        let inv = inverse(&discounted_system(&p, gamma), RESOLVENT_TOL, "discounted resolvent")?;
        Ok(inf_norm(&inv))
    };
    let mut c_m_hat: f64 = 0.0;
    if mdp.deterministic_policy_count() <= budget.enumeration_cap as f64 {
        for actions in DeterministicPolicies::new(s_n, a_n) {
            c_m_hat = c_m_hat.max(norm(&Policy::deterministic(&actions, a_n)?)?);
        }
    } else {
        use rand::Rng;
        let mut rng = seeded_rng(budget.seed, CM_HAT_STREAM);
        for _ in 0..budget.evaluations.max(1) {
            let actions: Vec<usize> = (0..s_n).map(|_| rng.random_range(0..a_n)).collect();
            c_m_hat = c_m_hat.max(norm(&Policy::deterministic(&actions, a_n)?)?);
        }
    }
    let bound = 1.0 / (1.0 - gamma);
    if c_m_hat > bound + 1e-9 {
        return Err(Error::NonFinite(format!(
            "discounted resolvent norm {c_m_hat} exceeds 1/(1-gamma) = {bound}"
        )));
    }
    let c_p = c_p_estimate(mdp, budget, false).value;
    let c_r = c_r_estimate(mdp, false).value;
    let kappa = kappa_r(mdp);
    Ok(DiscountedConstants {
        gamma,
        c_m_hat,
        c_m_hat_bound: bound,
        c_p,
        c_r,
        kappa_r: kappa,
        l2: smoothness_l2(c_m_hat, c_p, c_r, kappa),
    })
}
