//! Euclidean projection onto the policy polytope and projected policy
//! gradient ascent `π_{k+1} = Proj_Π[π_k + η∇ρ^{π_k}]`.

use std::io;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::complexity::{assemble_constants, empirical_smoothness, SearchBudget};
use crate::error::{Error, Result};
use crate::evaluator::evaluate;
use crate::gradient::{max_linear_form, policy_gradient, PolicyGradient};
use crate::linalg::frobenius_dot;
use crate::mdp::{Policy, TabularMdp};

/// Sort-and-threshold projection onto the probability simplex.
///
/// Ties in the descending sort keep index order, so the output is a
/// deterministic function of the input.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| y[j].total_cmp(&y[i]).then(i.cmp(&j)));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &i) in order.iter().enumerate() {
        cumulative += y[i];
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if y[i] - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Row-wise [`project_simplex`]; Π is a product of simplices so the
/// Euclidean projection factorizes over states.
pub fn project_policy(y: &DMatrix<f64>) -> Policy {
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    for s in 0..y.nrows() {
        let row: Vec<f64> = y.row(s).iter().copied().collect();
        for (a, p) in project_simplex(&row).into_iter().enumerate() {
            out[(s, a)] = p;
        }
    }
    Policy::from_matrix_unchecked(out)
}

pub fn pga_step(mdp: &TabularMdp, pi: &Policy, eta: f64) -> Result<Policy> {
    let g = policy_gradient(mdp, pi)?;
    Ok(project_policy(&(pi.as_matrix() + &g.grad * eta)))
}

/// With `b = Proj_Π(a + u)`: `p1 = ⟨u, b−a⟩ − ‖b−a‖²` (≥ 0) and
/// `p2 = ⟨c−b, u−(b−a)⟩` (≤ 0).
pub fn projection_property_check(a: &Policy, u: &DMatrix<f64>, c: &Policy) -> (f64, f64) {
    let b = project_policy(&(a.as_matrix() + u));
    let step = b.as_matrix() - a.as_matrix();
    let p1 = frobenius_dot(u, &step) - step.norm_squared();
    let p2 = frobenius_dot(&(c.as_matrix() - b.as_matrix()), &(u - &step));
    (p1, p2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum StepSize {
    Fixed(f64),
    /// `1/L₂` from certified constants.
    Certified,
    /// `1/L₂` from search constants.
    Search,
    /// Inverse of the sampled curvature lower bound; fast but without an
    /// ascent guarantee.
    Empirical,
}

/// Samples drawn by [`StepSize::Empirical`].
pub const EMPIRICAL_SAMPLES: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub step_size: StepSize,
    pub max_iters: usize,
    /// Stop once `‖π_{k+1} − π_k‖₂` is at most this.
    pub stop_tolerance: f64,
    pub record_every: usize,
    pub keep_policies: bool,
    pub budget: SearchBudget,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            step_size: StepSize::Certified,
            max_iters: 1000,
            stop_tolerance: 0.0,
            record_every: 1,
            keep_policies: false,
            budget: SearchBudget::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stop_tolerance {} must be nonnegative",
                self.stop_tolerance
            )));
        }
        if let StepSize::Fixed(eta) = self.step_size {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!("step size {eta} must be positive")));
            }
        }
        Ok(())
    }
}

/// Resolves a [`StepSize`] to a number, estimating constants when needed.
pub fn resolve_step_size(mdp: &TabularMdp, step: StepSize, budget: &SearchBudget) -> Result<f64> {
    match step {
        StepSize::Fixed(eta) => Ok(eta),
        StepSize::Certified => Ok(assemble_constants(mdp, budget, None)?
            .certified
            .inverse_smoothness_step()),
        StepSize::Search => Ok(assemble_constants(mdp, budget, None)?
            .search
            .inverse_smoothness_step()),
        StepSize::Empirical => {
            let l = empirical_smoothness(mdp, EMPIRICAL_SAMPLES, budget.seed)?;
            Ok(if l > 0.0 { 1.0 / l } else { 1.0 })
        }
    }
}

/// Constants for the regret envelope reported alongside each iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    pub l2: f64,
    pub c_pl: f64,
    pub num_states: usize,
}

impl BoundConstants {
    /// `max(128·S·L₂·C_PL²/k, 2^{−k/2}·gap₀)` bounding the gap of `π_{k+1}`.
    pub fn gap_envelope(&self, k: usize, gap0: f64) -> f64 {
        self.gap_envelope_scaled(k, gap0, self.num_states as f64)
    }

    /// The same envelope without the factor S.
    pub fn gap_envelope_main(&self, k: usize, gap0: f64) -> f64 {
        self.gap_envelope_scaled(k, gap0, 1.0)
    }

    fn gap_envelope_scaled(&self, k: usize, gap0: f64, scale: f64) -> f64 {
        if k == 0 {
            return f64::INFINITY;
        }
        let rate = 128.0 * scale * self.l2 * self.c_pl * self.c_pl / k as f64;
        rate.max(0.5f64.powf(k as f64 / 2.0) * gap0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub rho: f64,
    pub gap: Option<f64>,
    /// `‖π_{k+1} − π_k‖₂` for the step taken from this iterate.
    pub step_norm: f64,
    pub grad_map_norm: f64,
    pub cumulative_regret: Option<f64>,
    /// Envelope on this iterate's gap; absent for k ≤ 1 or without constants.
    pub bound_theorem1: Option<f64>,
    pub policy: Option<Policy>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub eta: f64,
    pub records: Vec<TraceRecord>,
    pub final_policy: Policy,
    /// Number of completed update steps.
    pub iterations: usize,
    pub stopped_early: bool,
}

pub const TRACE_HEADER: [&str; 7] = [
    "iter",
    "rho",
    "gap",
    "step_norm",
    "grad_map_norm",
    "cumulative_regret",
    "bound_theorem1",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl RunTrace {
    pub fn rhos(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rho).collect()
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(TRACE_HEADER).map_err(io_err)?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                r.rho.to_string(),
                opt(r.gap),
                r.step_norm.to_string(),
                r.grad_map_norm.to_string(),
                opt(r.cumulative_regret),
                opt(r.bound_theorem1),
            ])
            .map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Runs projected ascent from `pi0`. Iterate k is recorded when
/// `k % record_every == 0` and always at the end; with `rho_star` the gap
/// and cumulative regret over every iterate are tracked.
pub fn run_pga(
    mdp: &TabularMdp,
    pi0: &Policy,
    config: &RunConfig,
    rho_star: Option<f64>,
    bound: Option<BoundConstants>,
) -> Result<RunTrace> {
    config.validate()?;
    mdp.check_policy(pi0)?;
    let eta = resolve_step_size(mdp, config.step_size, &config.budget)?;
    run_with_gradient(pi0, eta, config, rho_star, bound, |pi| {
        let eval = evaluate(mdp, pi)?;
        let g = PolicyGradient::from_evaluation(mdp, &eval);
        Ok((eval.rho, g.grad))
    })
}

/// Shared ascent loop; `oracle` returns the objective and its gradient.
pub(crate) fn run_with_gradient<F>(
    pi0: &Policy,
    eta: f64,
    config: &RunConfig,
    rho_star: Option<f64>,
    bound: Option<BoundConstants>,
    mut oracle: F,
) -> Result<RunTrace>
where
    F: FnMut(&Policy) -> Result<(f64, DMatrix<f64>)>,
{
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size {eta} must be positive")));
    }
    let mut pi = pi0.clone();
    let mut records = Vec::new();
    let mut regret = 0.0;
    let mut gap0 = None;
    let mut k = 0;
    let stopped_early;
    loop {
        let (rho, grad) = oracle(&pi)?;
        if !rho.is_finite() || grad.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("objective or gradient at iterate {k}")));
        }
        let next = project_policy(&(pi.as_matrix() + &grad * eta));
        let step_norm = pi.distance(&next);
        let gap = rho_star.map(|r| r - rho);
        if let Some(g) = gap {
            regret += g;
            gap0.get_or_insert(g);
        }
        let done = k == config.max_iters || step_norm <= config.stop_tolerance;
        if k % config.record_every == 0 || done {
            let bound_theorem1 = match (bound, gap0) {
                (Some(b), Some(g0)) if k >= 2 => Some(b.gap_envelope(k - 1, g0)),
                _ => None,
            };
            records.push(TraceRecord {
                iter: k,
                rho,
                gap,
                step_norm,
                grad_map_norm: step_norm / eta,
                cumulative_regret: gap.map(|_| regret),
                bound_theorem1,
                policy: config.keep_policies.then(|| pi.clone()),
            });
        }
        if done {
            stopped_early = k < config.max_iters;
            break;
        }
        pi = next;
        k += 1;
    }
    Ok(RunTrace {
        eta,
        records,
        final_policy: pi,
        iterations: k,
        stopped_early,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InequalitySummary {
    pub checked: usize,
    pub violations: usize,
    /// Smallest slack seen; negative means violated.
    pub worst_margin: f64,
}

impl InequalitySummary {
    fn new() -> Self {
        InequalitySummary {
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64, tolerance: f64) {
        self.checked += 1;
        if margin < -tolerance {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentReport {
    /// `ρ_{k+1} − ρ_k ≥ (L₂/2)‖π_{k+1} − π_k‖²`.
    pub ascent: InequalitySummary,
    /// `⟨∇ρ^{π_{k+1}}, π' − π_{k+1}⟩ ≤ 4√S·L₂‖π_{k+1} − π_k‖`.
    pub alignment: InequalitySummary,
    /// `a_{k+1}² + a_{k+1} − a_k ≤ 0`, `a_k = gap_k/(32·L₂·S·C_PL²)`.
    pub recursion: InequalitySummary,
    /// Gap envelope with the factor S.
    pub envelope: InequalitySummary,
    /// Gap envelope without the factor S; reported, not a pass criterion.
    pub envelope_main: InequalitySummary,
}

impl DescentReport {
    pub fn passed(&self) -> bool {
        self.ascent.passed()
            && self.alignment.passed()
            && self.recursion.passed()
            && self.envelope.passed()
    }
}

pub const DESCENT_TOL: f64 = 1e-10;

/// Checks the per-step inequalities along a trace recorded with
/// `record_every = 1`, policies, and gaps. The alignment check maximizes
/// over `comparison` plus the deterministic policy maximizing the linear
/// form, which attains the maximum over all of Π.
pub fn verify_descent_inequalities(
    mdp: &TabularMdp,
    trace: &RunTrace,
    constants: &BoundConstants,
    comparison: &[Policy],
) -> Result<DescentReport> {
    let records = &trace.records;
    for (i, r) in records.iter().enumerate() {
        if r.iter != i {
            return Err(Error::MissingTraceData("consecutive iterates"));
        }
        if r.policy.is_none() {
            return Err(Error::MissingTraceData("policies"));
        }
        if r.gap.is_none() {
            return Err(Error::MissingTraceData("optimality gaps"));
        }
    }
    let l2 = constants.l2;
    let s = constants.num_states as f64;
    let scale = 32.0 * l2 * s * constants.c_pl * constants.c_pl;
    let mut report = DescentReport {
        ascent: InequalitySummary::new(),
        alignment: InequalitySummary::new(),
        recursion: InequalitySummary::new(),
        envelope: InequalitySummary::new(),
        envelope_main: InequalitySummary::new(),
    };
    let gap0 = records.first().and_then(|r| r.gap).unwrap_or(0.0);
    for pair in records.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let (p_prev, p_next) = (prev.policy.as_ref().unwrap(), next.policy.as_ref().unwrap());
        let (g_prev, g_next) = (prev.gap.unwrap(), next.gap.unwrap());
        let step = p_prev.distance(p_next);

        report
            .ascent
            .record(next.rho - prev.rho - 0.5 * l2 * step * step, DESCENT_TOL);

        let grad = policy_gradient(mdp, p_next)?.grad;
        let (mut best, _) = max_linear_form(&grad, p_next);
        let base = frobenius_dot(&grad, p_next.as_matrix());
        for c in comparison {
            best = best.max(frobenius_dot(&grad, c.as_matrix()) - base);
        }
        report
            .alignment
            .record(4.0 * s.sqrt() * l2 * step - best, DESCENT_TOL);

        if scale > 0.0 {
            let (a_k, a_next) = (g_prev / scale, g_next / scale);
            report
                .recursion
                .record(-(a_next * a_next + a_next - a_k), DESCENT_TOL);
        }

        let k = prev.iter;
        if k >= 1 {
            report
                .envelope
                .record(constants.gap_envelope(k, gap0) - g_next, DESCENT_TOL);
            report
                .envelope_main
                .record(constants.gap_envelope_main(k, gap0) - g_next, DESCENT_TOL);
        }
    }
    Ok(report)
}

/// Iterations until `ρ_k − ρ_0` first reaches `fraction` of `ρ_final − ρ_0`;
/// zero when there is no improvement.
pub fn iterations_to_fraction(rhos: &[f64], iters: &[usize], fraction: f64) -> usize {
    let (Some(&first), Some(&last)) = (rhos.first(), rhos.last()) else {
        return 0;
    };
    let total = last - first;
    if !(total > 0.0) {
        return 0;
    }
    rhos.iter()
        .zip(iters)
        .find(|(&r, _)| r - first >= fraction * total)
        .map(|(_, &k)| k)
        .unwrap_or(*iters.last().unwrap())
}
