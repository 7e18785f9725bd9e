//! Exact policy evaluation: average reward, the Φ-gauge differential value
//! `v_φ = (I − ΦP^π)⁻¹Φr^π`, and the relative Q-function in the same gauge.

use nalgebra::{DMatrix, DVector};

use crate::chain::{
    apply_phi, resolvent, stationary_distribution, PolicyKernel, Resolvent, StationaryDistribution,
};
use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::mdp::{kernel_under_policy, reward_under_policy, Policy, PolicyReward, TabularMdp};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AverageReward {
    pub value: f64,
}

/// The unique Bellman solution with `𝟙ᵀv = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialValue {
    pub values: DVector<f64>,
}

/// `Q(s,a) = r(s,a) − ρ + Σ_{s'} P(s'|s,a) v_φ(s')`.
///
/// `gauge_shift` is the constant separating this Q from the one whose
/// stationary mean is zero: `Q_φ = Q₀ + gauge_shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeQ {
    pub values: DMatrix<f64>,
    pub gauge_shift: f64,
}

/// Everything derived from one exact solve of the induced chain.
#[derive(Clone, Debug)]
pub struct PolicyEvaluation {
    pub kernel: PolicyKernel,
    pub reward: PolicyReward,
    pub stationary: StationaryDistribution,
    pub resolvent: Resolvent,
    pub value: DifferentialValue,
    pub rho: f64,
}

impl PolicyEvaluation {
    pub fn relative_q(&self, mdp: &TabularMdp) -> RelativeQ {
        let v = &self.value.values;
        let values = DMatrix::from_fn(mdp.num_states(), mdp.num_actions(), |s, a| {
            let next: f64 = mdp
                .transition_row(s, a)
                .iter()
                .zip(v.iter())
                .map(|(p, x)| p * x)
                .sum();
            mdp.reward(s, a) - self.rho + next
        });
        RelativeQ {
            values,
            gauge_shift: self.stationary.probs.dot(v),
        }
    }
}

pub fn evaluate(mdp: &TabularMdp, pi: &Policy) -> Result<PolicyEvaluation> {
    let kernel = kernel_under_policy(mdp, pi)?;
    let reward = reward_under_policy(mdp, pi)?;
    let stationary = stationary_distribution(&kernel)?;
    let resolvent = resolvent(&kernel)?;
    let rho = stationary.probs.dot(&reward.vector);
    let values = &resolvent.matrix * apply_phi(&reward.vector);
    if !rho.is_finite() || values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("policy evaluation".into()));
    }
    Ok(PolicyEvaluation {
        kernel,
        reward,
        stationary,
        resolvent,
        value: DifferentialValue { values },
        rho,
    })
}

pub fn average_reward(mdp: &TabularMdp, pi: &Policy) -> Result<AverageReward> {
    let kernel = kernel_under_policy(mdp, pi)?;
    let reward = reward_under_policy(mdp, pi)?;
    let d = stationary_distribution(&kernel)?;
    Ok(AverageReward {
        value: d.probs.dot(&reward.vector),
    })
}

pub fn differential_value(mdp: &TabularMdp, pi: &Policy) -> Result<DifferentialValue> {
    Ok(evaluate(mdp, pi)?.value)
}

pub fn relative_q(mdp: &TabularMdp, pi: &Policy) -> Result<RelativeQ> {
    Ok(evaluate(mdp, pi)?.relative_q(mdp))
}

/// `‖r^π + P^π v − v − ρ𝟙‖_∞`.
pub fn bellman_residual(mdp: &TabularMdp, pi: &Policy, v: &DVector<f64>, rho: f64) -> Result<f64> {
    if v.len() != mdp.num_states() {
        return Err(Error::DimensionMismatch {
            what: "value vector",
            expected: mdp.num_states(),
            found: v.len(),
        });
    }
    let kernel = kernel_under_policy(mdp, pi)?;
    let reward = reward_under_policy(mdp, pi)?;
    let residual = &reward.vector + &kernel.matrix * v - v - DVector::from_element(v.len(), rho);
    Ok(max_abs(&residual))
}
