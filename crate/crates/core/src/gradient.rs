//! Analytic policy gradient `∂ρ/∂π(a|s) = d^π(s)·Q^π(s,a)` for tabular
//! policies, directional derivatives along policy differences, and central
//! finite-difference probes that never leave the policy simplex.

use nalgebra::{DMatrix, DVector};

use crate::chain::{apply_phi, phi_times};
use crate::error::{Error, Result};
use crate::evaluator::{average_reward, evaluate, PolicyEvaluation};
use crate::linalg::frobenius_dot;
use crate::mdp::{Policy, TabularMdp, PROB_TOL};

/// Default central-difference step.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Entries below this are treated as sitting on the simplex boundary.
const BOUNDARY_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyGradient {
    pub grad: DMatrix<f64>,
}

impl PolicyGradient {
    pub fn from_evaluation(mdp: &TabularMdp, eval: &PolicyEvaluation) -> Self {
        let q = eval.relative_q(mdp);
        let d = &eval.stationary.probs;
        let mut grad = q.values;
        for (s, mut row) in grad.row_iter_mut().enumerate() {
            row *= d[s];
        }
        PolicyGradient { grad }
    }

    pub fn dot(&self, u: &Direction) -> f64 {
        frobenius_dot(&self.grad, &u.u)
    }
}

/// Per-state zero-sum S×A tensor, e.g. `π' − π`.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    pub u: DMatrix<f64>,
}

impl Direction {
    pub fn new(u: DMatrix<f64>) -> Result<Self> {
        for (s, row) in u.row_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if !sum.is_finite() || sum.abs() > PROB_TOL {
                return Err(Error::InvalidDirection(format!("row {s} sums to {sum}")));
            }
        }
        Ok(Direction { u })
    }

    pub fn between(from: &Policy, to: &Policy) -> Result<Self> {
        if from.as_matrix().shape() != to.as_matrix().shape() {
            return Err(Error::DimensionMismatch {
                what: "direction endpoints",
                expected: from.num_states() * from.num_actions(),
                found: to.num_states() * to.num_actions(),
            });
        }
        Ok(Direction {
            u: to.as_matrix() - from.as_matrix(),
        })
    }

    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Direction {
            u: DMatrix::zeros(num_states, num_actions),
        }
    }

    pub fn norm(&self) -> f64 {
        self.u.norm()
    }

    pub fn scaled(&self, factor: f64) -> Direction {
        Direction {
            u: &self.u * factor,
        }
    }

    /// `π + εu ∈ Π` for some ε > 0.
    pub fn is_feasible_at(&self, pi: &Policy) -> bool {
        self.u
            .iter()
            .zip(pi.as_matrix().iter())
            .all(|(&u, &p)| !(p <= BOUNDARY_TOL && u < -BOUNDARY_TOL))
    }

    /// Largest α with `π + αu ∈ Π`.
    pub fn max_step(&self, pi: &Policy) -> f64 {
        self.u
            .iter()
            .zip(pi.as_matrix().iter())
            .filter(|(&u, _)| u < 0.0)
            .map(|(&u, &p)| p / -u)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `π + αu` if it stays in Π (within rounding, which is clipped away).
pub fn step_policy(pi: &Policy, u: &Direction, alpha: f64) -> Result<Policy> {
    let mut m = pi.as_matrix() + &u.u * alpha;
    for x in m.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-13 {
                return Err(Error::InfeasibleStep { alpha });
            }
            *x = 0.0;
        }
    }
    Ok(Policy::from_matrix_unchecked(m))
}

pub fn policy_gradient(mdp: &TabularMdp, pi: &Policy) -> Result<PolicyGradient> {
    let eval = evaluate(mdp, pi)?;
    Ok(PolicyGradient::from_evaluation(mdp, &eval))
}

pub fn directional_derivative(mdp: &TabularMdp, pi: &Policy, u: &Direction) -> Result<f64> {
    mdp.check_tensor(&u.u)?;
    if !u.is_feasible_at(pi) {
        return Err(Error::InfeasibleDirection);
    }
    Ok(policy_gradient(mdp, pi)?.dot(u))
}

/// Central differences of ρ along `e_a − 𝟙/A` in each state.
///
/// Entry (s,a) equals `grad(s,a) − mean_a' grad(s,a')` up to O(ε²), so its
/// inner product with any [`Direction`] matches the analytic gradient's.
pub fn finite_difference_gradient(
    mdp: &TabularMdp,
    pi: &Policy,
    epsilon: f64,
) -> Result<DMatrix<f64>> {
    mdp.check_policy(pi)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    let min_entry = pi.min_entry();
    if min_entry < 2.0 * epsilon {
        return Err(Error::BoundaryTooClose { epsilon, min_entry });
    }
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let mut out = DMatrix::zeros(s_n, a_n);
    if a_n == 1 {
        return Ok(out);
    }
    for s in 0..s_n {
        for a in 0..a_n {
            let mut basis = DMatrix::zeros(s_n, a_n);
            for b in 0..a_n {
                basis[(s, b)] = if a == b { 1.0 } else { 0.0 } - 1.0 / a_n as f64;
            }
            let plus = Policy::from_matrix_unchecked(pi.as_matrix() + &basis * epsilon);
            let minus = Policy::from_matrix_unchecked(pi.as_matrix() - &basis * epsilon);
            let rp = average_reward(mdp, &plus)?.value;
            let rm = average_reward(mdp, &minus)?.value;
            out[(s, a)] = (rp - rm) / (2.0 * epsilon);
        }
    }
    Ok(out)
}

/// One-sided Richardson estimate of `dρ^{π+αu}/dα` at 0 from steps α and α/2;
/// usable at boundary policies where central differences are infeasible.
pub fn richardson_directional(
    mdp: &TabularMdp,
    pi: &Policy,
    u: &Direction,
    alpha: f64,
) -> Result<f64> {
    let rho0 = average_reward(mdp, pi)?.value;
    let full = average_reward(mdp, &step_policy(pi, u, alpha)?)?.value;
    let half = average_reward(mdp, &step_policy(pi, u, 0.5 * alpha)?)?.value;
    let d_full = (full - rho0) / alpha;
    let d_half = (half - rho0) / (0.5 * alpha);
    Ok(2.0 * d_half - d_full)
}

/// `max_{π'∈Π} ⟨π' − π, g⟩` and the deterministic π' attaining it
/// (lowest action index on ties).
pub fn max_linear_form(g: &DMatrix<f64>, pi: &Policy) -> (f64, Vec<usize>) {
    let mut actions = Vec::with_capacity(g.nrows());
    let mut best_total = 0.0;
    for s in 0..g.nrows() {
        let mut best = 0;
        for a in 1..g.ncols() {
            if g[(s, a)] > g[(s, best)] {
                best = a;
            }
        }
        best_total += g[(s, best)];
        actions.push(best);
    }
    (best_total - frobenius_dot(g, pi.as_matrix()), actions)
}

/// `P^u` for a direction `u`.
pub fn kernel_direction(mdp: &TabularMdp, u: &Direction) -> DMatrix<f64> {
    mdp.mix_kernel(&u.u)
}

/// `r^u` for a direction `u`.
pub fn reward_direction(mdp: &TabularMdp, u: &Direction) -> DVector<f64> {
    mdp.mix_reward(&u.u)
}

/// `∂v_φ^{π+αu}/∂α` at α = 0: `MΦP^u MΦr^π + MΦr^u`.
pub fn value_direction_derivative(
    mdp: &TabularMdp,
    pi: &Policy,
    u: &Direction,
) -> Result<DVector<f64>> {
    mdp.check_tensor(&u.u)?;
    if !u.is_feasible_at(pi) {
        return Err(Error::InfeasibleDirection);
    }
    let eval = evaluate(mdp, pi)?;
    let m = &eval.resolvent.matrix;
    let phi_pu = phi_times(&kernel_direction(mdp, u));
    let phi_r = apply_phi(&eval.reward.vector);
    let phi_ru = apply_phi(&reward_direction(mdp, u));
    Ok(m * (phi_pu * (m * phi_r)) + m * phi_ru)
}

/// `(ρ^{π+αu} − 2ρ^π + ρ^{π−αu})/α²`.
pub fn rho_second_difference(
    mdp: &TabularMdp,
    pi: &Policy,
    u: &Direction,
    alpha: f64,
) -> Result<f64> {
    mdp.check_tensor(&u.u)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} must be positive")));
    }
    let plus = step_policy(pi, u, alpha)?;
    let minus = step_policy(pi, &u.scaled(-1.0), alpha)?;
    let rp = average_reward(mdp, &plus)?.value;
    let r0 = average_reward(mdp, pi)?.value;
    let rm = average_reward(mdp, &minus)?.value;
    Ok((rp - 2.0 * r0 + rm) / (alpha * alpha))
}
