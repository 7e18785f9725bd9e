//! Ground truth for small instances: the optimal gain ρ* and a deterministic
//! optimal policy, by relative value iteration or exhaustive enumeration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evaluator::{average_reward, evaluate};
use crate::gradient::{max_linear_form, policy_gradient};
use crate::linalg::frobenius_dot;
use crate::mdp::{Policy, TabularMdp};

/// Largest `A^S` for exhaustive enumeration.
pub const EXHAUSTIVE_CAP: usize = 100_000;
pub const RVI_TOLERANCE: f64 = 1e-10;
pub const RVI_MAX_ITERS: usize = 500_000;
/// Allowed gap between the two methods when both run.
pub const AGREEMENT_TOL: f64 = 1e-9;
/// Self-loop weight of the aperiodicity transform `(1−τ)I + τP`.
const APERIODICITY_TAU: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    RelativeValueIteration,
    Exhaustive,
    /// Run both when enumeration is feasible and require agreement,
    /// otherwise relative value iteration alone.
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSolution {
    pub pi_star: Policy,
    pub actions: Vec<usize>,
    pub rho_star: f64,
    /// The method whose policy is returned.
    pub method: SolveMethod,
    /// RVI sweeps, or deterministic policies evaluated.
    pub iterations: usize,
    /// Final span of `Th − h` for RVI, 0 for enumeration.
    pub span: f64,
}

pub fn solve_optimal(mdp: &TabularMdp, method: SolveMethod, tolerance: f64) -> Result<OptimalSolution> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    let feasible = mdp.deterministic_policy_count() <= EXHAUSTIVE_CAP as f64;
    match method {
        SolveMethod::Exhaustive => exhaustive(mdp),
        SolveMethod::RelativeValueIteration => match relative_value_iteration(mdp, tolerance) {
            Err(Error::NonConvergence(_)) if feasible => exhaustive(mdp),
            other => other,
        },
        SolveMethod::Auto => {
            let rvi = relative_value_iteration(mdp, tolerance);
            if !feasible {
                return rvi;
            }
            let ex = exhaustive(mdp)?;
            match rvi {
                Ok(rvi) => {
                    if (rvi.rho_star - ex.rho_star).abs() > AGREEMENT_TOL {
                        return Err(Error::OracleDisagreement(format!(
                            "relative value iteration gives {}, enumeration gives {}",
                            rvi.rho_star, ex.rho_star
                        )));
                    }
                    Ok(rvi)
                }
                Err(Error::NonConvergence(_)) => Ok(ex),
                Err(e) => Err(e),
            }
        }
    }
}

fn exhaustive(mdp: &TabularMdp) -> Result<OptimalSolution> {
    let count = mdp.deterministic_policy_count();
    if count > EXHAUSTIVE_CAP as f64 {
        return Err(Error::EnumerationTooLarge {
            count,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluated = 0;
    for actions in DeterministicPolicies::new(s_n, a_n) {
        let pi = Policy::deterministic(&actions, a_n)?;
        evaluated += 1;
        let rho = match average_reward(mdp, &pi) {
            Ok(r) => r.value,
            Err(Error::NotErgodic(_)) | Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(b, _)| rho > *b) {
            best = Some((rho, actions));
        }
    }
    let (rho_star, actions) = best.ok_or_else(|| {
        Error::NotErgodic("no deterministic policy induces a unichain".into())
    })?;
    Ok(OptimalSolution {
        pi_star: Policy::deterministic(&actions, a_n)?,
        actions,
        rho_star,
        method: SolveMethod::Exhaustive,
        iterations: evaluated,
        span: 0.0,
    })
}

/// Relative value iteration with reference state 0 on the lazy transform of
/// the MDP, which has the same optimal policies and gain scaled by τ.
fn relative_value_iteration(mdp: &TabularMdp, tolerance: f64) -> Result<OptimalSolution> {
    let (s_n, a_n) = (mdp.num_states(), mdp.num_actions());
    let tau = APERIODICITY_TAU;
    let mut h = DVector::<f64>::zeros(s_n);
    let mut span = f64::INFINITY;
    let mut iterations = 0;
    let backup = |h: &DVector<f64>| -> (DVector<f64>, Vec<usize>) {
        let mut th = DVector::zeros(s_n);
        let mut greedy = vec![0; s_n];
        for s in 0..s_n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..a_n {
                let next: f64 = mdp
                    .transition_row(s, a)
                    .iter()
                    .zip(h.iter())
                    .map(|(p, x)| p * x)
                    .sum();
                let q = tau * mdp.reward(s, a) + (1.0 - tau) * h[s] + tau * next;
                if q > best {
                    best = q;
                    greedy[s] = a;
                }
            }
            th[s] = best;
        }
        (th, greedy)
    };
    while iterations < RVI_MAX_ITERS {
        iterations += 1;
        let (th, _) = backup(&h);
        let diff = &th - &h;
        span = diff.max() - diff.min();
        if !span.is_finite() {
            return Err(Error::NonFinite("relative value iteration".into()));
        }
        let offset = th[0];
        h = th.add_scalar(-offset);
        if span < tolerance {
            break;
        }
    }
    if span >= tolerance {
        return Err(Error::NonConvergence(format!(
            "relative value iteration span {span} after {iterations} sweeps"
        )));
    }
    let (_, actions) = backup(&h);
    let pi_star = Policy::deterministic(&actions, a_n)?;
    let rho_star = average_reward(mdp, &pi_star)?.value;
    Ok(OptimalSolution {
        pi_star,
        actions,
        rho_star,
        method: SolveMethod::RelativeValueIteration,
        iterations,
        span,
    })
}

/// Lexicographic enumeration of all `A^S` action assignments.
#[derive(Clone, Debug)]
pub struct DeterministicPolicies {
    current: Option<Vec<usize>>,
    num_actions: usize,
}

impl DeterministicPolicies {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        DeterministicPolicies {
            current: (num_actions > 0).then(|| vec![0; num_states]),
            num_actions,
        }
    }
}

impl Iterator for DeterministicPolicies {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        for i in (0..next.len()).rev() {
            next[i] += 1;
            if next[i] < self.num_actions {
                self.current = Some(next);
                return Some(out);
            }
            next[i] = 0;
        }
        Some(out)
    }
}

/// `|(ρ* − ρ^π) − Σ_s d^{π*}(s) Σ_a Q^π(s,a)(π*(a|s) − π(a|s))|`.
pub fn pdl_check(mdp: &TabularMdp, pi: &Policy, solution: &OptimalSolution) -> Result<f64> {
    mdp.check_policy(pi)?;
    let eval = evaluate(mdp, pi)?;
    let star = evaluate(mdp, &solution.pi_star)?;
    let q = eval.relative_q(mdp).values;
    let diff = solution.pi_star.as_matrix() - pi.as_matrix();
    let mut weighted = DMatrix::zeros(mdp.num_states(), mdp.num_actions());
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            weighted[(s, a)] = star.stationary.probs[s] * q[(s, a)];
        }
    }
    let rhs = frobenius_dot(&weighted, &diff);
    let lhs = star.rho - eval.rho;
    Ok((lhs - rhs).abs())
}

/// `C_PL·max_{π'}⟨π' − π, ∇ρ^π⟩ − (ρ* − ρ^π)`; nonnegative whenever
/// `c_pl` is a valid gradient-domination constant.
pub fn pl_inequality_check(
    mdp: &TabularMdp,
    pi: &Policy,
    solution: &OptimalSolution,
    c_pl: f64,
) -> Result<f64> {
    let g = policy_gradient(mdp, pi)?;
    let (best, _) = max_linear_form(&g.grad, pi);
    let gap = solution.rho_star - average_reward(mdp, pi)?.value;
    Ok(c_pl * best - gap)
}
