#![allow(dead_code)]

use avgpg::mdp::{generate_mdp, KernelFamily, MdpGeneratorSpec, RewardFamily, TabularMdp};
use avgpg::Policy;

pub fn random_mdp(s: usize, a: usize, seed: u64) -> TabularMdp {
    generate_mdp(&MdpGeneratorSpec::new(
        s,
        a,
        KernelFamily::DirichletUniform,
        RewardFamily::UniformRange,
        seed,
    ))
    .unwrap()
}

/// Kernel and reward that ignore the action.
pub fn action_independent(s: usize, a: usize, seed: u64) -> TabularMdp {
    let base = random_mdp(s, 1, seed);
    let mut kernel = Vec::new();
    let mut reward = Vec::new();
    for st in 0..s {
        for _ in 0..a {
            kernel.extend_from_slice(base.transition_row(st, 0));
            reward.push(base.reward(st, 0));
        }
    }
    TabularMdp::new(s, a, kernel, reward).unwrap()
}

/// Plain nested-vector `P^π`, built without the library's mixing code.
pub fn induced_kernel(mdp: &TabularMdp, pi: &Policy) -> Vec<Vec<f64>> {
    let n = mdp.num_states();
    let mut p = vec![vec![0.0; n]; n];
    for s in 0..n {
        for a in 0..mdp.num_actions() {
            for j in 0..n {
                p[s][j] += pi.prob(s, a) * mdp.transition(s, a, j);
            }
        }
    }
    p
}

pub fn induced_reward(mdp: &TabularMdp, pi: &Policy) -> Vec<f64> {
    (0..mdp.num_states())
        .map(|s| (0..mdp.num_actions()).map(|a| pi.prob(s, a) * mdp.reward(s, a)).sum())
        .collect()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn vec_mat(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let n = m[0].len();
    (0..n).map(|j| v.iter().zip(m).map(|(x, row)| x * row[j]).sum()).collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b[0].len();
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
        .collect()
}

/// Stationary distribution by Cesàro-averaged power iteration on the lazy chain.
pub fn power_stationary(p: &[Vec<f64>], iters: usize) -> Vec<f64> {
    let n = p.len();
    let lazy: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * p[i][j] + if i == j { 0.5 } else { 0.0 }).collect())
        .collect();
    let mut x = vec![1.0 / n as f64; n];
    let mut avg = vec![0.0; n];
    let tail = iters / 2;
    for k in 0..iters {
        x = vec_mat(&x, &lazy);
        if k >= tail {
            for (a, v) in avg.iter_mut().zip(&x) {
                *a += v;
            }
        }
    }
    let count = (iters - tail) as f64;
    avg.iter().map(|a| a / count).collect()
}

/// Gaussian elimination with partial pivoting, independent of nalgebra.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}
