//! The experiments. Each returns typed per-instance results; the
//! `*_datasets` functions turn them into sorted CSV datasets.

use std::env;

use avgpg::complexity::{assemble_constants, c_p_estimate, c_r_estimate, Provenance};
use avgpg::discounted::{
    discounted_bound, halving_discounts, run_discounted_pga, uniform_initial,
    vanishing_discount_check, VanishingDiscountRow,
};
use avgpg::evaluator::evaluate;
use avgpg::mdp::{generate_mdp, KernelFamily, MdpGeneratorSpec, RewardFamily};
use avgpg::optimizer::{
    iterations_to_fraction, run_pga, verify_descent_inequalities, BoundConstants, DescentReport,
    RunConfig, RunTrace, StepSize,
};
use avgpg::oracle::{solve_optimal, SolveMethod, EXHAUSTIVE_CAP, RVI_TOLERANCE};
use avgpg::{Policy, TabularMdp};
use log::{debug, info};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::dataset::{error_status, opt, Dataset, Row, OK};
use crate::error::{ExperimentError, Result};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "AVGPG_WORKERS";

/// Fraction of the final improvement used for convergence speed.
pub const CONVERGENCE_FRACTION: f64 = 0.9;

/// Tolerance of the monotone-curve check.
pub const MONOTONE_TOL: f64 = 1e-10;

/// Applies [`WORKERS_ENV`] on top of the configured count.
pub fn effective_workers(configured: usize) -> usize {
    match env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) => {
            info!("{WORKERS_ENV}={n} overrides the configured worker count {configured}");
            n
        }
        None => configured,
    }
}

/// Maps `f` over `items` on a pool of `workers` threads, keeping order.
fn par_map<T, R, F>(workers: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| items.into_par_iter().map(f).collect())
}

fn start_policy(config: &ExperimentConfig, s: usize, a: usize) -> Policy {
    match config.policy_seed {
        Some(seed) => Policy::random(s, a, seed),
        None => Policy::uniform(s, a),
    }
}

/// Step size resolved once so runs do not repeat the constant search.
fn resolve_eta(mdp: &TabularMdp, run: &RunConfig) -> avgpg::Result<f64> {
    avgpg::optimizer::resolve_step_size(mdp, run.step_size, &run.budget)
}

/// One convergence curve `ρ^{π_k}` over the recorded iterates.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub eta: f64,
    pub iters: Vec<usize>,
    pub rhos: Vec<f64>,
}

impl Curve {
    fn from_trace(trace: &RunTrace) -> Self {
        Curve {
            eta: trace.eta,
            iters: trace.records.iter().map(|r| r.iter).collect(),
            rhos: trace.rhos(),
        }
    }

    /// `ρ^{π_k} − ρ^{π₀}` at each recorded iterate.
    pub fn improvements(&self) -> Vec<f64> {
        let first = self.rhos.first().copied().unwrap_or(0.0);
        self.rhos.iter().map(|r| r - first).collect()
    }

    pub fn final_improvement(&self) -> f64 {
        self.improvements().last().copied().unwrap_or(0.0)
    }

    pub fn iterations_to_fraction(&self) -> usize {
        iterations_to_fraction(&self.rhos, &self.iters, CONVERGENCE_FRACTION)
    }

    pub fn is_monotone(&self) -> bool {
        self.rhos.windows(2).all(|w| w[1] >= w[0] - MONOTONE_TOL)
    }
}

fn run_curve(mdp: &TabularMdp, config: &ExperimentConfig, seed: u64) -> avgpg::Result<Curve> {
    let mut run = config
        .run_config(seed)
        .map_err(|e| avgpg::Error::InvalidArgument(e.to_string()))?;
    run.step_size = StepSize::Fixed(resolve_eta(mdp, &run)?);
    let pi0 = start_policy(config, mdp.num_states(), mdp.num_actions());
    Ok(Curve::from_trace(&run_pga(mdp, &pi0, &run, None, None)?))
}

/// A curve for one (instance, parameter) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRun {
    pub num_states: usize,
    pub num_actions: usize,
    pub seed: u64,
    /// δ for the reward-diameter sweep, the kernel weight for the C_p sweep.
    pub param: Option<f64>,
    /// Measured C_r or C_p of the instance.
    pub constant: Option<f64>,
    pub result: std::result::Result<Curve, String>,
}

pub fn size_sweep(config: &ExperimentConfig) -> Vec<CurveRun> {
    let cells: Vec<(usize, usize, u64)> = config
        .sizes
        .iter()
        .flat_map(|&[s, a]| config.seeds.iter().map(move |&seed| (s, a, seed)))
        .collect();
    par_map(config.workers, cells, |(s, a, seed)| {
        debug!("size-sweep {s}x{a} seed {seed}");
        let result = config
            .generator(s, a, seed)
            .map_err(|e| e.to_string())
            .and_then(|spec| generate_mdp(&spec).map_err(|e| e.to_string()))
            .and_then(|mdp| run_curve(&mdp, config, seed).map_err(|e| e.to_string()));
        CurveRun {
            num_states: s,
            num_actions: a,
            seed,
            param: None,
            constant: None,
            result,
        }
    })
}

pub fn reward_diameter_sweep(config: &ExperimentConfig) -> Vec<CurveRun> {
    let [s, a] = config.diameter_size;
    let cells: Vec<(u64, f64)> = config
        .seeds
        .iter()
        .flat_map(|&seed| config.deltas.iter().map(move |&d| (seed, d)))
        .collect();
    par_map(config.workers, cells, |(seed, delta)| {
        debug!("reward-diameter delta {delta} seed {seed}");
        let spec = MdpGeneratorSpec::new(
            s,
            a,
            KernelFamily::DirichletUniform,
            RewardFamily::DiameterControlled { delta },
            seed,
        );
        let mut constant = None;
        let result = generate_mdp(&spec).map_err(|e| e.to_string()).and_then(|mdp| {
            constant = Some(c_r_estimate(&mdp, false).value);
            run_curve(&mdp, config, seed).map_err(|e| e.to_string())
        });
        CurveRun {
            num_states: s,
            num_actions: a,
            seed,
            param: Some(delta),
            constant,
            result,
        }
    })
}

/// `(1−w)·P₀ + w·P₁` with an action-independent `P₀` and a
/// permutation kernel `P₁`, sharing the rewards of the configured family.
pub fn interpolated_mdp(
    config: &ExperimentConfig,
    s: usize,
    a: usize,
    seed: u64,
    weight: f64,
) -> Result<TabularMdp> {
    let base = generate_mdp(&MdpGeneratorSpec::new(
        s,
        1,
        KernelFamily::DirichletUniform,
        RewardFamily::UniformRange,
        seed,
    ))?;
    let distinct = generate_mdp(&MdpGeneratorSpec::new(
        s,
        a,
        KernelFamily::PermutationDeterministic,
        config.reward()?,
        seed,
    ))?;
    let mut kernel = Vec::with_capacity(s * a * s);
    for st in 0..s {
        let b = base.transition_row(st, 0);
        for act in 0..a {
            let p = distinct.transition_row(st, act);
            kernel.extend(b.iter().zip(p).map(|(x, y)| (1.0 - weight) * x + weight * y));
        }
    }
    Ok(TabularMdp::new(s, a, kernel, distinct.reward_flat().to_vec())?)
}

pub fn cp_sweep(config: &ExperimentConfig) -> Vec<CurveRun> {
    let [s, a] = config.cp_size;
    let cells: Vec<(u64, f64)> = config
        .seeds
        .iter()
        .flat_map(|&seed| config.cp_weights.iter().map(move |&w| (seed, w)))
        .collect();
    par_map(config.workers, cells, |(seed, weight)| {
        debug!("cp-sweep weight {weight} seed {seed}");
        let mut constant = None;
        let result = interpolated_mdp(config, s, a, seed, weight)
            .map_err(|e| e.to_string())
            .and_then(|mdp| {
                constant = Some(c_p_estimate(&mdp, &config.budget(seed), false).value);
                run_curve(&mdp, config, seed).map_err(|e| e.to_string())
            });
        CurveRun {
            num_states: s,
            num_actions: a,
            seed,
            param: Some(weight),
            constant,
            result,
        }
    })
}

pub const CURVE_HEADER: [&str; 10] = [
    "num_states",
    "num_actions",
    "seed",
    "param",
    "constant",
    "iter",
    "rho",
    "improvement",
    "eta",
    "status",
];

pub const CURVE_SUMMARY_HEADER: [&str; 10] = [
    "num_states",
    "num_actions",
    "seed",
    "param",
    "constant",
    "iters_to_90",
    "final_improvement",
    "monotone",
    "eta",
    "status",
];

/// Per-iterate curves and one summary row per run.
pub fn curve_datasets(name: &'static str, runs: &[CurveRun]) -> (Dataset, Dataset) {
    let summary_name: &'static str = match name {
        "size_sweep" => "size_sweep_summary",
        "reward_diameter" => "reward_diameter_summary",
        "cp_sweep" => "cp_sweep_summary",
        _ => "curve_summary",
    };
    let mut curves = Dataset::new(name, 1, &CURVE_HEADER);
    let mut summary = Dataset::new(summary_name, 1, &CURVE_SUMMARY_HEADER);
    for run in runs {
        let key = vec![
            run.num_states as f64,
            run.num_actions as f64,
            run.seed as f64,
            run.param.unwrap_or(0.0),
        ];
        let lead = vec![
            run.num_states.to_string(),
            run.num_actions.to_string(),
            run.seed.to_string(),
            opt(run.param),
            opt(run.constant),
        ];
        match &run.result {
            Ok(curve) => {
                for ((k, rho), imp) in curve.iters.iter().zip(&curve.rhos).zip(curve.improvements()) {
                    let mut fields = lead.clone();
                    fields.extend([
                        k.to_string(),
                        rho.to_string(),
                        imp.to_string(),
                        curve.eta.to_string(),
                        OK.into(),
                    ]);
                    let mut row_key = key.clone();
                    row_key.push(*k as f64);
                    curves.push(Row::new(row_key, fields));
                }
                let mut fields = lead.clone();
                fields.extend([
                    curve.iterations_to_fraction().to_string(),
                    curve.final_improvement().to_string(),
                    curve.is_monotone().to_string(),
                    curve.eta.to_string(),
                    OK.into(),
                ]);
                summary.push(Row::new(key, fields));
            }
            Err(msg) => {
                let mut fields = lead.clone();
                fields.extend([String::new(), String::new(), String::new(), String::new(), error_status(msg)]);
                curves.push_failure(Row::new(key.clone(), fields.clone()));
                summary.push_failure(Row::new(key, fields));
            }
        }
    }
    curves.sort();
    summary.sort();
    (curves, summary)
}

/// One estimated constant of one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub family: &'static str,
    pub quantity: &'static str,
    pub num_states: usize,
    pub num_actions: usize,
    pub instance: usize,
    pub result: std::result::Result<(f64, Provenance), String>,
}

const SCALING_KERNELS: [(&str, KernelFamily); 2] = [
    ("dirichlet-uniform", KernelFamily::DirichletUniform),
    ("permutation-deterministic", KernelFamily::PermutationDeterministic),
];

const SCALING_REWARDS: [(&str, RewardFamily); 3] = [
    ("uniform-range", RewardFamily::UniformRange),
    ("sparse-rewards", RewardFamily::Sparse { density: 0.3 }),
    ("two-level", RewardFamily::TwoLevel),
];

/// C_p over kernel families and C_r over reward families, each also over
/// state-constant policies; instance i uses seed `seeds[0] + i`.
pub fn constant_scaling(config: &ExperimentConfig) -> Vec<ScalingRow> {
    let base_seed = config.seeds[0];
    let mut cells = Vec::new();
    for &s in &config.scaling_states {
        for &a in &config.scaling_actions {
            for i in 0..config.scaling_instances {
                for (name, kf) in SCALING_KERNELS {
                    cells.push((name, Some(kf), None, s, a, i));
                }
                for (name, rf) in SCALING_REWARDS {
                    cells.push((name, None, Some(rf), s, a, i));
                }
            }
        }
    }
    let nested = par_map(config.workers, cells, |(family, kf, rf, s, a, i)| {
        let seed = base_seed + i as u64;
        let spec = MdpGeneratorSpec::new(
            s,
            a,
            kf.unwrap_or(KernelFamily::DirichletUniform),
            rf.unwrap_or(RewardFamily::UniformRange),
            seed,
        );
        let mdp = generate_mdp(&spec).map_err(|e| e.to_string());
        let quantities: [(&'static str, bool); 2] = if kf.is_some() {
            [("c_p", false), ("c_p_state_constant", true)]
        } else {
            [("c_r", false), ("c_r_state_constant", true)]
        };
        quantities
            .into_iter()
            .map(|(quantity, restrict)| {
                let result = mdp.as_ref().map_err(Clone::clone).map(|m| {
                    let e = if kf.is_some() {
                        c_p_estimate(m, &config.budget(seed), restrict)
                    } else {
                        c_r_estimate(m, restrict)
                    };
                    (e.value, e.provenance)
                });
                ScalingRow {
                    family,
                    quantity,
                    num_states: s,
                    num_actions: a,
                    instance: i,
                    result,
                }
            })
            .collect::<Vec<_>>()
    });
    nested.into_iter().flatten().collect()
}

pub const SCALING_HEADER: [&str; 10] = [
    "family",
    "quantity",
    "num_states",
    "num_actions",
    "instance",
    "value",
    "sqrt_a",
    "ratio",
    "provenance",
    "status",
];

fn family_rank(family: &str, quantity: &str) -> f64 {
    let families = ["dirichlet-uniform", "permutation-deterministic", "uniform-range", "sparse-rewards", "two-level"];
    let quantities = ["c_p", "c_p_state_constant", "c_r", "c_r_state_constant"];
    let f = families.iter().position(|x| *x == family).unwrap_or(families.len());
    let q = quantities.iter().position(|x| *x == quantity).unwrap_or(quantities.len());
    (f * 10 + q) as f64
}

pub fn scaling_dataset(rows: &[ScalingRow]) -> Dataset {
    let mut ds = Dataset::new("constant_scaling", 1, &SCALING_HEADER);
    for r in rows {
        let key = vec![
            family_rank(r.family, r.quantity),
            r.num_states as f64,
            r.num_actions as f64,
            r.instance as f64,
        ];
        let sqrt_a = (r.num_actions as f64).sqrt();
        let mut fields = vec![
            r.family.to_string(),
            r.quantity.to_string(),
            r.num_states.to_string(),
            r.num_actions.to_string(),
            r.instance.to_string(),
        ];
        match &r.result {
            Ok((value, prov)) => {
                fields.extend([
                    value.to_string(),
                    sqrt_a.to_string(),
                    (value / sqrt_a).to_string(),
                    prov.as_str().to_string(),
                    OK.into(),
                ]);
                ds.push(Row::new(key, fields));
            }
            Err(msg) => {
                fields.extend([String::new(), sqrt_a.to_string(), String::new(), String::new(), error_status(msg)]);
                ds.push_failure(Row::new(key, fields));
            }
        }
    }
    ds.sort();
    ds
}

/// Everything checked on one bound-verification instance.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundOutcome {
    pub rho_star: f64,
    pub constants: BoundConstants,
    pub c_pl_provenance: Provenance,
    pub trace: RunTrace,
    pub report: DescentReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRun {
    pub seed: u64,
    pub result: std::result::Result<BoundOutcome, String>,
}

/// Oracle, certified constants, a recorded run and the per-step checks.
pub fn verify_instance(mdp: &TabularMdp, config: &ExperimentConfig, seed: u64) -> avgpg::Result<BoundOutcome> {
    let count = mdp.deterministic_policy_count();
    if count > EXHAUSTIVE_CAP as f64 {
        return Err(avgpg::Error::InvalidArgument(format!(
            "oracle infeasible: {count} deterministic policies exceed {EXHAUSTIVE_CAP}"
        )));
    }
    let sol = solve_optimal(mdp, SolveMethod::Auto, RVI_TOLERANCE)?;
    let budget = config.budget(seed);
    let report = assemble_constants(mdp, &budget, Some(&sol.pi_star))?;
    let c_pl = report.certified.c_pl.expect("optimal policy supplied");
    let constants = BoundConstants {
        l2: report.certified.l2.value,
        c_pl: c_pl.value,
        num_states: mdp.num_states(),
    };
    let step = config
        .step_size
        .resolve()
        .map_err(|e| avgpg::Error::InvalidArgument(e.to_string()))?;
    let eta = match step {
        StepSize::Certified => report.certified.inverse_smoothness_step(),
        StepSize::Search => report.search.inverse_smoothness_step(),
        other => avgpg::optimizer::resolve_step_size(mdp, other, &budget)?,
    };
    let run = RunConfig {
        step_size: StepSize::Fixed(eta),
        max_iters: config.iterations,
        record_every: 1,
        keep_policies: true,
        budget,
        ..RunConfig::default()
    };
    let pi0 = start_policy(config, mdp.num_states(), mdp.num_actions());
    let trace = run_pga(mdp, &pi0, &run, Some(sol.rho_star), Some(constants))?;
    let report = verify_descent_inequalities(mdp, &trace, &constants, &[sol.pi_star.clone()])?;
    Ok(BoundOutcome {
        rho_star: sol.rho_star,
        constants,
        c_pl_provenance: c_pl.provenance,
        trace,
        report,
    })
}

pub fn bound_verification(config: &ExperimentConfig) -> Vec<BoundRun> {
    let [s, a] = config.bound_size;
    par_map(config.workers, config.seeds.clone(), |seed| {
        debug!("bound-verify seed {seed}");
        let result = config
            .generator(s, a, seed)
            .map_err(|e| e.to_string())
            .and_then(|spec| generate_mdp(&spec).map_err(|e| e.to_string()))
            .and_then(|mdp| verify_instance(&mdp, config, seed).map_err(|e| e.to_string()));
        BoundRun { seed, result }
    })
}

pub const BOUND_TRACE_HEADER: [&str; 8] = [
    "seed",
    "iter",
    "rho",
    "gap",
    "cumulative_regret",
    "bound_theorem1",
    "eta",
    "status",
];

pub const BOUND_SUMMARY_HEADER: [&str; 16] = [
    "seed",
    "rho_star",
    "l2",
    "c_pl",
    "c_pl_provenance",
    "eta",
    "iterations",
    "ascent_violations",
    "alignment_violations",
    "recursion_violations",
    "envelope_violations",
    "envelope_main_violations",
    "worst_ascent_margin",
    "worst_envelope_margin",
    "passed",
    "status",
];

pub fn bound_datasets(runs: &[BoundRun]) -> (Dataset, Dataset) {
    let mut traces = Dataset::new("bound_verify", 1, &BOUND_TRACE_HEADER);
    let mut summary = Dataset::new("bound_verify_summary", 1, &BOUND_SUMMARY_HEADER);
    for run in runs {
        let seed = run.seed.to_string();
        match &run.result {
            Ok(o) => {
                for r in &o.trace.records {
                    traces.push(Row::new(
                        vec![run.seed as f64, r.iter as f64],
                        vec![
                            seed.clone(),
                            r.iter.to_string(),
                            r.rho.to_string(),
                            opt(r.gap),
                            opt(r.cumulative_regret),
                            opt(r.bound_theorem1),
                            o.trace.eta.to_string(),
                            OK.into(),
                        ],
                    ));
                }
                let rep = &o.report;
                summary.push(Row::new(
                    vec![run.seed as f64],
                    vec![
                        seed.clone(),
                        o.rho_star.to_string(),
                        o.constants.l2.to_string(),
                        o.constants.c_pl.to_string(),
                        o.c_pl_provenance.as_str().to_string(),
                        o.trace.eta.to_string(),
                        o.trace.iterations.to_string(),
                        rep.ascent.violations.to_string(),
                        rep.alignment.violations.to_string(),
                        rep.recursion.violations.to_string(),
                        rep.envelope.violations.to_string(),
                        rep.envelope_main.violations.to_string(),
                        rep.ascent.worst_margin.to_string(),
                        rep.envelope.worst_margin.to_string(),
                        rep.passed().to_string(),
                        OK.into(),
                    ],
                ));
            }
            Err(msg) => {
                let mut t = vec![seed.clone()];
                t.extend(std::iter::repeat_n(String::new(), 6));
                t.push(error_status(msg));
                traces.push_failure(Row::new(vec![run.seed as f64], t));
                let mut s = vec![seed.clone()];
                s.extend(std::iter::repeat_n(String::new(), 14));
                s.push(error_status(msg));
                summary.push_failure(Row::new(vec![run.seed as f64], s));
            }
        }
    }
    traces.sort();
    summary.sort();
    (traces, summary)
}

/// One (instance, γ) cell of the discounted comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscountRow {
    pub seed: u64,
    pub vanishing: VanishingDiscountRow,
    pub eta: f64,
    pub mismatch: f64,
    /// Discounted envelope at the last iterate.
    pub bound_final: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscountRun {
    pub seed: u64,
    pub result: std::result::Result<Vec<DiscountRow>, String>,
}

fn discount_instance(mdp: &TabularMdp, config: &ExperimentConfig, seed: u64) -> avgpg::Result<Vec<DiscountRow>> {
    let (s, a) = (mdp.num_states(), mdp.num_actions());
    let mu = uniform_initial(s);
    let pi0 = start_policy(config, s, a);
    let gammas = halving_discounts(config.discount_levels);
    let vanishing = vanishing_discount_check(mdp, &pi0, &mu, &gammas)?;
    vanishing
        .into_iter()
        .map(|v| {
            let run = run_discounted_pga(mdp, &pi0, v.gamma, &mu, config.discount_iterations)?;
            Ok(DiscountRow {
                seed,
                vanishing: v,
                eta: run.eta,
                mismatch: run.mismatch,
                bound_final: discounted_bound(run.trace.iterations.max(1), s, a, v.gamma, run.mismatch),
                violations: run.violations(),
            })
        })
        .collect()
}

pub fn discount_compare(config: &ExperimentConfig) -> Vec<DiscountRun> {
    let [s, a] = config.discount_size;
    par_map(config.workers, config.seeds.clone(), |seed| {
        debug!("discount-compare seed {seed}");
        let result = config
            .generator(s, a, seed)
            .map_err(|e| e.to_string())
            .and_then(|spec| generate_mdp(&spec).map_err(|e| e.to_string()))
            .and_then(|mdp| discount_instance(&mdp, config, seed).map_err(|e| e.to_string()));
        DiscountRun { seed, result }
    })
}

pub const DISCOUNT_HEADER: [&str; 11] = [
    "seed",
    "gamma",
    "scaled_value",
    "rho",
    "error",
    "eta",
    "mismatch",
    "bound_final",
    "scaled_bound",
    "violations",
    "status",
];

pub fn discount_dataset(runs: &[DiscountRun]) -> Dataset {
    let mut ds = Dataset::new("discount_compare", 1, &DISCOUNT_HEADER);
    for run in runs {
        match &run.result {
            Ok(rows) => {
                for r in rows {
                    let g = r.vanishing.gamma;
                    ds.push(Row::new(
                        vec![run.seed as f64, g],
                        vec![
                            run.seed.to_string(),
                            g.to_string(),
                            r.vanishing.scaled_value.to_string(),
                            r.vanishing.rho.to_string(),
                            r.vanishing.error.to_string(),
                            r.eta.to_string(),
                            r.mismatch.to_string(),
                            r.bound_final.to_string(),
                            ((1.0 - g) * r.bound_final).to_string(),
                            r.violations.to_string(),
                            OK.into(),
                        ],
                    ));
                }
            }
            Err(msg) => {
                let mut fields = vec![run.seed.to_string()];
                fields.extend(std::iter::repeat_n(String::new(), 9));
                fields.push(error_status(msg));
                ds.push_failure(Row::new(vec![run.seed as f64], fields));
            }
        }
    }
    ds.sort();
    ds
}

fn first_instance(config: &ExperimentConfig) -> Result<(MdpGeneratorSpec, TabularMdp)> {
    let [s, a] = config.sizes[0];
    let spec = config.generator(s, a, config.seeds[0])?;
    let mdp = generate_mdp(&spec)?;
    Ok((spec, mdp))
}

/// Both constant flavors for the first configured instance; `C_PL` is
/// included when the oracle is feasible.
pub fn constants_report(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let (spec, mdp) = first_instance(config)?;
    let budget = config.budget(spec.seed);
    let sol = if mdp.deterministic_policy_count() <= EXHAUSTIVE_CAP as f64 {
        Some(solve_optimal(&mdp, SolveMethod::Auto, RVI_TOLERANCE)?)
    } else {
        None
    };
    let report = assemble_constants(&mdp, &budget, sol.as_ref().map(|s| &s.pi_star))?;
    let detail = &report.c_m_detail;
    Ok(json!({
        "instance": spec,
        "rho_star": sol.as_ref().map(|s| s.rho_star),
        "search": report.search,
        "certified": report.certified,
        "search_step_size": report.search.inverse_smoothness_step(),
        "certified_step_size": report.certified.inverse_smoothness_step(),
        "c_m_dobrushin": detail.dobrushin,
        "c_m_envelope": detail.envelope,
        "c_pl_minorization": report.c_pl_detail.as_ref().and_then(|c| c.minorization_bound),
        "evaluations": report.evaluations,
    }))
}

/// Gain, values and relative Q of the starting policy on the first instance.
pub fn evaluate_report(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let (spec, mdp) = first_instance(config)?;
    let pi = start_policy(config, spec.num_states, spec.num_actions);
    let eval = evaluate(&mdp, &pi).map_err(ExperimentError::from)?;
    let q = eval.relative_q(&mdp).values;
    let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    };
    Ok(json!({
        "instance": spec,
        "rho": eval.rho,
        "stationary": eval.stationary.probs.as_slice(),
        "value": eval.value.values.as_slice(),
        "q": rows(&q),
        "policy": rows(pi.as_matrix()),
    }))
}
