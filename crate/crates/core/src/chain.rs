//! Markov-chain machinery behind the projected Bellman equation: stationary
//! distributions, the centering projection `Φ = I − 𝟙𝟙ᵀ/S`, the resolvent
//! `(I − ΦP)⁻¹`, and spectral / mixing diagnostics.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, inf_norm, max_abs};
use crate::mdp::PROB_TOL;

/// Residual tolerance for `dᵀP = dᵀ`.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Entrywise tolerance for `(I − ΦP)·M = I`.
pub const RESOLVENT_TOL: f64 = 1e-8;
/// Spectral radius of `ΦP` must stay below `1 − SPECTRAL_MARGIN`.
pub const SPECTRAL_MARGIN: f64 = 1e-9;

/// Row-stochastic S×S matrix `P^π`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyKernel {
    pub matrix: DMatrix<f64>,
}

impl PolicyKernel {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("kernel must be square and non-empty".into()));
        }
        for (s, row) in matrix.row_iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidArgument(format!("row {s} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidArgument(format!("row {s} sums to {sum}")));
            }
        }
        Ok(PolicyKernel { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if flat.len() != n * n {
            return Err(Error::InvalidArgument("kernel must be square".into()));
        }
        PolicyKernel::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub(crate) fn new_unchecked(matrix: DMatrix<f64>) -> Self {
        PolicyKernel { matrix }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    pub probs: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resolvent {
    pub matrix: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicityEstimate {
    pub c_e: f64,
    pub lambda: f64,
    /// `‖Pᵏ − 𝟙dᵀ‖_∞` for k = 0..=max_k.
    pub per_step_norms: Vec<f64>,
}

impl ErgodicityEstimate {
    /// Envelope value `C_e·λᵏ` with the same inflation used in the fit.
    pub fn envelope(&self, k: usize) -> f64 {
        self.c_e * (self.lambda + ENVELOPE_INFLATION).powi(k as i32)
    }
}

const ENVELOPE_INFLATION: f64 = 1e-9;
/// Norms below this are treated as exact zeros when fitting `C_e`.
const ENVELOPE_FLOOR: f64 = 1e-13;

/// Communicating-class summary of the support graph of a kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainStructure {
    pub num_classes: usize,
    pub num_closed_classes: usize,
    /// Period of the (first) closed class.
    pub period: usize,
}

impl ChainStructure {
    pub fn is_irreducible(&self) -> bool {
        self.num_classes == 1
    }

    pub fn is_unichain(&self) -> bool {
        self.num_closed_classes == 1
    }

    pub fn is_ergodic(&self) -> bool {
        self.is_irreducible() && self.period == 1
    }
}

/// `Φv = v − mean(v)·𝟙`.
pub fn apply_phi(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    if n == 0 {
        return v.clone();
    }
    let mean = v.sum() / n as f64;
    v.map(|x| x - mean)
}

/// `ΦA`, centering each column of `a`.
pub fn phi_times(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / col.len() as f64;
        col.iter_mut().for_each(|x| *x -= mean);
    }
    out
}

/// Strongly connected components, closed classes and period of the support
/// graph (edges where `P(j|i) > 0`).
pub fn chain_structure(pk: &PolicyKernel) -> ChainStructure {
    let n = pk.size();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| pk.matrix[(i, j)] > 0.0).collect())
        .collect();
    let comp = tarjan_scc(&adj);
    let num_classes = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut closed = vec![true; num_classes];
    for (i, succ) in adj.iter().enumerate() {
        for &j in succ {
            if comp[i] != comp[j] {
                closed[comp[i]] = false;
            }
        }
    }
    let num_closed_classes = closed.iter().filter(|&&c| c).count();
    let period = closed
        .iter()
        .position(|&c| c)
        .map_or(0, |class| class_period(&adj, &comp, class));
    ChainStructure {
        num_classes,
        num_closed_classes,
        period,
    }
}

fn class_period(adj: &[Vec<usize>], comp: &[usize], class: usize) -> usize {
    let start = match comp.iter().position(|&c| c == class) {
        Some(s) => s,
        None => return 0,
    };
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut g = 0usize;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if comp[v] != class {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
            }
        }
    }
    g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<usize>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }
    // Iterative to avoid deep recursion on long chains.
    fn visit(st: &mut State<'_>, root: usize) {
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        st.index[root] = st.next_index;
        st.low[root] = st.next_index;
        st.next_index += 1;
        st.stack.push(root);
        st.on_stack[root] = true;
        while let Some(&(v, edge)) = work.last() {
            if edge < st.adj[v].len() {
                let w = st.adj[v][edge];
                if let Some(top) = work.last_mut() {
                    top.1 += 1;
                }
                if st.index[w] == usize::MAX {
                    st.index[w] = st.next_index;
                    st.low[w] = st.next_index;
                    st.next_index += 1;
                    st.stack.push(w);
                    st.on_stack[w] = true;
                    work.push((w, 0));
                } else if st.on_stack[w] {
                    st.low[v] = st.low[v].min(st.index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    st.low[parent] = st.low[parent].min(st.low[v]);
                }
                if st.low[v] == st.index[v] {
                    loop {
                        let w = st.stack.pop().expect("tarjan stack underflow");
                        st.on_stack[w] = false;
                        st.comp[w] = st.next_comp;
                        if w == v {
                            break;
                        }
                    }
                    st.next_comp += 1;
                }
            }
        }
    }
    let n = adj.len();
    let mut st = State {
        adj,
        index: vec![usize::MAX; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![usize::MAX; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if st.index[v] == usize::MAX {
            visit(&mut st, v);
        }
    }
    st.comp
}

/// Stationary distribution from `(Pᵀ − I)d = 0` with the last equation
/// replaced by `Σd = 1`. Falls back to lazy power iteration when the direct
/// solve is inaccurate. Multichain kernels are rejected up front.
pub fn stationary_distribution(pk: &PolicyKernel) -> Result<StationaryDistribution> {
    let structure = chain_structure(pk);
    if !structure.is_unichain() {
        return Err(Error::NotErgodic(format!(
            "{} closed communicating classes",
            structure.num_closed_classes
        )));
    }
    let n = pk.size();
    let p = &pk.matrix;
    let mut system = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let direct = linalg::solve(&system, &rhs, "stationary system").map(normalize_probs);
    if let Ok(d) = direct {
        if stationary_residual(p, &d) <= STATIONARY_TOL {
            return Ok(StationaryDistribution { probs: d });
        }
    }
    let d = lazy_power_iteration(p);
    let residual = stationary_residual(p, &d);
    if residual <= STATIONARY_TOL {
        Ok(StationaryDistribution { probs: d })
    } else {
        Err(Error::Singular(format!(
            "stationary residual {residual:e} after fallback"
        )))
    }
}

fn normalize_probs(mut d: DVector<f64>) -> DVector<f64> {
    d.iter_mut().for_each(|x| {
        if *x < 0.0 {
            *x = 0.0
        }
    });
    let total = d.sum();
    if total > 0.0 {
        d /= total;
    }
    d
}

/// `‖dᵀP − dᵀ‖_∞`.
pub fn stationary_residual(p: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    max_abs(&(p.tr_mul(d) - d))
}

fn lazy_power_iteration(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let lazy = (p + DMatrix::<f64>::identity(n, n)) * 0.5;
    let mut d = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..200_000 {
        let next = normalize_probs(lazy.tr_mul(&d));
        let delta = max_abs(&(&next - &d));
        d = next;
        if delta < 1e-15 {
            break;
        }
    }
    d
}

/// `M = (I − ΦP)⁻¹` by dense LU.
pub fn resolvent(pk: &PolicyKernel) -> Result<Resolvent> {
    let n = pk.size();
    let a = DMatrix::<f64>::identity(n, n) - phi_times(&pk.matrix);
    let m = linalg::inverse(&a, RESOLVENT_TOL, "I - ΦP")?;
    Ok(Resolvent { matrix: m })
}

/// Eigenvalues of a real square matrix through the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = m
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::NonConvergence("Schur decomposition".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralReport {
    pub radius: f64,
    pub pass: bool,
}

/// Spectral radius of `ΦP`; passes iff below `1 − 1e-9`.
pub fn spectral_check(pk: &PolicyKernel) -> Result<SpectralReport> {
    let radius = spectral_radius(&phi_times(&pk.matrix))?;
    Ok(SpectralReport {
        radius,
        pass: radius < 1.0 - SPECTRAL_MARGIN,
    })
}

/// `‖(ΦP)ᵏ − ΦPᵏ‖_∞`.
pub fn matrix_power_identity_check(pk: &PolicyKernel, k: usize) -> f64 {
    let phi_p = phi_times(&pk.matrix);
    let mut lhs = phi_p.clone();
    let mut p_pow = pk.matrix.clone();
    for _ in 1..k {
        lhs = &lhs * &phi_p;
        p_pow = &p_pow * &pk.matrix;
    }
    if k == 0 {
        return 0.0;
    }
    inf_norm(&(lhs - phi_times(&p_pow)))
}

/// Records `‖Pᵏ − 𝟙dᵀ‖_∞` for k ≤ `max_k`, takes λ as the second-largest
/// eigenvalue modulus of P, and fits the smallest `C_e` with
/// `norm_k ≤ C_e(λ + 1e-9)ᵏ` over the recorded k.
pub fn ergodicity_estimate(pk: &PolicyKernel, max_k: usize) -> Result<ErgodicityEstimate> {
    let n = pk.size();
    let d = stationary_distribution(pk)?.probs;
    let limit = DMatrix::from_fn(n, n, |_, j| d[j]);
    // Eigenvalues of P − 𝟙dᵀ are those of P with the unit eigenvalue sent to 0.
    let lambda = spectral_radius(&(&pk.matrix - &limit))?.min(1.0 - f64::EPSILON);
    let rate = lambda + ENVELOPE_INFLATION;
    let mut norms = Vec::with_capacity(max_k + 1);
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut c_e: f64 = 0.0;
    for k in 0..=max_k {
        if k > 0 {
            power = &power * &pk.matrix;
        }
        let norm = inf_norm(&(&power - &limit));
        if norm > ENVELOPE_FLOOR {
            c_e = c_e.max(norm / rate.powi(k as i32));
        }
        norms.push(norm);
    }
    Ok(ErgodicityEstimate {
        c_e,
        lambda,
        per_step_norms: norms,
    })
}

/// Dobrushin coefficient `½ max_{i,j} ‖P_i − P_j‖₁`.
pub fn dobrushin_coefficient(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let tv: f64 = (0..p.ncols()).map(|c| (p[(i, c)] - p[(j, c)]).abs()).sum();
            best = best.max(0.5 * tv);
        }
    }
    best
}
