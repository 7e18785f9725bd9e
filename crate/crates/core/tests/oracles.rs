//! Library results checked against independently computed references.

mod common;

use avgpg::chain::{phi_times, resolvent, stationary_distribution};
use avgpg::complexity::{
    c_m_estimate, c_p_estimate, c_pl_estimate, c_r_estimate, empirical_smoothness, kappa_r,
    SearchBudget,
};
use avgpg::discounted::{discounted_gradient, discounted_value, occupancy_measure, uniform_initial};
use avgpg::evaluator::{average_reward, differential_value, evaluate};
use avgpg::gradient::{
    directional_derivative, finite_difference_gradient, policy_gradient, richardson_directional,
    step_policy, value_direction_derivative, Direction,
};
use avgpg::linalg::frobenius_dot;
use avgpg::mdp::kernel_under_policy;
use avgpg::optimizer::project_simplex;
use avgpg::oracle::{solve_optimal, DeterministicPolicies, SolveMethod, RVI_TOLERANCE};
use avgpg::{Policy, TabularMdp};
use common::*;
use nalgebra::DMatrix;

#[test]
fn stationary_matches_power_iteration() {
    for seed in 0..20 {
        let mdp = random_mdp(5, 3, seed);
        let pi = Policy::random(5, 3, seed);
        let p = induced_kernel(&mdp, &pi);
        let reference = power_stationary(&p, 4000);
        let d = stationary_distribution(&kernel_under_policy(&mdp, &pi).unwrap()).unwrap();
        for (a, b) in d.probs.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let rho: f64 = reference.iter().zip(induced_reward(&mdp, &pi)).map(|(d, r)| d * r).sum();
        assert!((average_reward(&mdp, &pi).unwrap().value - rho).abs() < 1e-9);
    }
}

#[test]
fn resolvent_matches_neumann_series() {
    for seed in 0..20 {
        let mdp = random_mdp(4, 3, seed);
        let pi = Policy::random(4, 3, seed + 50);
        let n = 4;
        let p = induced_kernel(&mdp, &pi);
        // ΦP with Φ = I − 𝟙𝟙ᵀ/n, then Σ_{k<500} (ΦP)^k.
        let phi_p: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| p[i][j] - (0..n).map(|r| p[r][j]).sum::<f64>() / n as f64)
                    .collect()
            })
            .collect();
        let mut term: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut sum = term.clone();
        for _ in 1..500 {
            term = mat_mul(&term, &phi_p);
            for i in 0..n {
                for j in 0..n {
                    sum[i][j] += term[i][j];
                }
            }
        }
        let m = resolvent(&kernel_under_policy(&mdp, &pi).unwrap()).unwrap().matrix;
        for i in 0..n {
            for j in 0..n {
                assert!((m[(i, j)] - sum[i][j]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn differential_value_matches_constrained_bellman_solve() {
    for seed in 0..20 {
        let mdp = random_mdp(5, 2, seed);
        let pi = Policy::random(5, 2, seed + 7);
        let n = 5;
        let p = induced_kernel(&mdp, &pi);
        let r = induced_reward(&mdp, &pi);
        // Unknowns (v, ρ): (I − P)v + ρ𝟙 = r and 𝟙ᵀv = 0.
        let mut a = vec![vec![0.0; n + 1]; n + 1];
        let mut b = vec![0.0; n + 1];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = if i == j { 1.0 } else { 0.0 } - p[i][j];
            }
            a[i][n] = 1.0;
            b[i] = r[i];
            a[n][i] = 1.0;
        }
        let x = gauss_solve(a, b);
        let eval = evaluate(&mdp, &pi).unwrap();
        for i in 0..n {
            assert!((eval.value.values[i] - x[i]).abs() < 1e-10);
        }
        assert!((eval.rho - x[n]).abs() < 1e-12);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let eps = 1e-6;
    for seed in 0..10 {
        let mdp = random_mdp(4, 3, seed);
        let pi = Policy::random(4, 3, seed + 100);
        let g = policy_gradient(&mdp, &pi).unwrap();
        for k in 0..20 {
            let target = Policy::random(4, 3, 1000 * seed + k);
            let u = Direction::between(&pi, &target).unwrap().scaled(0.5);
            let plus = step_policy(&pi, &u, eps).unwrap();
            let minus = step_policy(&pi, &u, -eps).unwrap();
            let fd = (average_reward(&mdp, &plus).unwrap().value
                - average_reward(&mdp, &minus).unwrap().value)
                / (2.0 * eps);
            assert!(rel_err(g.dot(&u), fd) <= 1e-5, "{} vs {fd}", g.dot(&u));
        }
    }
}

#[test]
fn finite_difference_tensor_reproduces_inner_products() {
    for seed in 0..5 {
        let mdp = random_mdp(3, 4, seed);
        let pi = Policy::random(3, 4, seed + 3);
        let fd = finite_difference_gradient(&mdp, &pi, 1e-6).unwrap();
        let g = policy_gradient(&mdp, &pi).unwrap();
        for k in 0..10 {
            let u = Direction::between(&pi, &Policy::random(3, 4, 50 + k)).unwrap();
            assert!(rel_err(frobenius_dot(&fd, &u.u), g.dot(&u)) <= 1e-5);
        }
    }
}

#[test]
fn single_state_finite_differences_are_centered_rewards() {
    let reward = vec![0.3, -0.8, 0.5, 0.1];
    let mdp = TabularMdp::new(1, 4, vec![1.0; 4], reward.clone()).unwrap();
    let fd = finite_difference_gradient(&mdp, &Policy::random(1, 4, 3), 1e-6).unwrap();
    let mean = reward.iter().sum::<f64>() / 4.0;
    for a in 0..4 {
        assert!((fd[(0, a)] - (reward[a] - mean)).abs() < 1e-8);
    }
}

#[test]
fn directional_derivative_matches_richardson_extrapolation() {
    for seed in 0..10 {
        let mdp = random_mdp(4, 3, seed);
        let pi = Policy::random(4, 3, seed + 20);
        let u = Direction::between(&pi, &Policy::random(4, 3, seed + 40)).unwrap();
        let analytic = directional_derivative(&mdp, &pi, &u).unwrap();
        let rho0 = average_reward(&mdp, &pi).unwrap().value;
        let slope = |alpha: f64| {
            let moved = step_policy(&pi, &u, alpha).unwrap();
            (average_reward(&mdp, &moved).unwrap().value - rho0) / alpha
        };
        let extrapolated = 2.0 * slope(5e-4) - slope(1e-3);
        assert!(rel_err(analytic, extrapolated) < 1e-5);
        let lib = richardson_directional(&mdp, &pi, &u, 1e-3).unwrap();
        assert!(rel_err(analytic, lib) < 1e-5);
    }
}

#[test]
fn value_derivative_matches_central_differences() {
    let eps = 1e-6;
    for seed in 0..10 {
        let mdp = random_mdp(4, 3, seed);
        let pi = Policy::random(4, 3, seed + 60);
        let u = Direction::between(&pi, &Policy::random(4, 3, seed + 70)).unwrap();
        let analytic = value_direction_derivative(&mdp, &pi, &u).unwrap();
        let plus = differential_value(&mdp, &step_policy(&pi, &u, eps).unwrap()).unwrap();
        let minus = differential_value(&mdp, &step_policy(&pi, &u, -eps).unwrap()).unwrap();
        let fd = (plus.values - minus.values) / (2.0 * eps);
        for i in 0..4 {
            assert!((analytic[i] - fd[i]).abs() <= 1e-5 * (1.0 + analytic[i].abs()));
        }
    }
}

/// Brute-force projection over a grid of step `h` on the simplex.
fn grid_projection(y: &[f64], h: f64) -> (Vec<f64>, f64) {
    let steps = (1.0 / h).round() as usize;
    let n = y.len();
    let mut best = (vec![], f64::INFINITY);
    let mut counts = vec![0usize; n];
    fn rec(
        i: usize,
        left: usize,
        counts: &mut Vec<usize>,
        y: &[f64],
        h: f64,
        best: &mut (Vec<f64>, f64),
    ) {
        if i + 1 == counts.len() {
            counts[i] = left;
            let x: Vec<f64> = counts.iter().map(|&c| c as f64 * h).collect();
            let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
            if d < best.1 {
                *best = (x, d);
            }
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, y, h, best);
        }
    }
    rec(0, steps, &mut counts, y, h, &mut best);
    best
}

#[test]
fn projection_matches_grid_search() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for n in 1..=3 {
        for _ in 0..10 {
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
            let x = project_simplex(&y);
            let dist: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            let (grid_x, grid_d) = grid_projection(&y, 1e-3);
            // The exact projection is never worse than a grid point and
            // lies within one grid cell of the best one.
            assert!(dist <= grid_d + 1e-12);
            for (a, b) in x.iter().zip(&grid_x) {
                assert!((a - b).abs() <= 2e-3, "{x:?} vs {grid_x:?}");
            }
        }
    }
    for _ in 0..3 {
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..2.0)).collect();
        let x = project_simplex(&y);
        let dist: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        let (_, grid_d) = grid_projection(&y, 0.02);
        assert!(dist <= grid_d + 1e-12);
    }
}

#[test]
fn kappa_matches_enumeration() {
    for (s, a) in [(3, 3), (4, 2), (2, 5), (6, 4)] {
        for seed in 0..5 {
            let mdp = random_mdp(s, a, seed);
            let mut best: f64 = 0.0;
            for actions in DeterministicPolicies::new(s, a) {
                let r: Vec<f64> = (0..s).map(|st| mdp.reward(st, actions[st])).collect();
                let mean = r.iter().sum::<f64>() / s as f64;
                best = r.iter().map(|x| (x - mean).abs()).fold(best, f64::max);
            }
            assert!((kappa_r(&mdp) - best).abs() < 1e-14);
        }
    }
}

#[test]
fn c_r_and_c_p_dominate_policy_pair_ratios() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for seed in 0..5 {
        let mdp = random_mdp(4, 3, seed);
        let c_r = c_r_estimate(&mdp, false).value;
        let c_p = c_p_estimate(&mdp, &SearchBudget::default(), false).value;
        let mut seen_r: f64 = 0.0;
        let mut seen_p: f64 = 0.0;
        for _ in 0..500 {
            let p1 = Policy::random_with(4, 3, &mut rng);
            let p2 = Policy::random_with(4, 3, &mut rng);
            let dist = p1.distance(&p2);
            let (k1, k2) = (induced_kernel(&mdp, &p1), induced_kernel(&mdp, &p2));
            let (r1, r2) = (induced_reward(&mdp, &p1), induced_reward(&mdp, &p2));
            let dr = r1.iter().zip(&r2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dp = (0..4)
                .map(|i| (0..4).map(|j| (k1[i][j] - k2[i][j]).abs()).sum::<f64>())
                .fold(0.0, f64::max);
            seen_r = seen_r.max(dr / dist);
            seen_p = seen_p.max(dp / dist);
        }
        assert!(seen_r <= c_r + 1e-12 && seen_p <= c_p + 1e-12);
        assert!(c_r <= 3f64.sqrt() && c_p <= 3f64.sqrt());
    }
}

#[test]
fn c_m_enumeration_agrees_with_sampled_search() {
    let mdp = random_mdp(3, 2, 8);
    let exact = c_m_estimate(&mdp, &SearchBudget::new(0, 0)).unwrap();
    let budget = SearchBudget {
        evaluations: 3000,
        seed: 1,
        enumeration_cap: 0,
    };
    let sampled = c_m_estimate(&mdp, &budget).unwrap();
    assert!(sampled.estimate.value <= exact.estimate.value * (1.0 + 1e-12));
    assert!(sampled.estimate.value >= 0.99 * exact.estimate.value);
}

#[test]
fn c_pl_enumeration_dominates_random_probes() {
    let mdp = random_mdp(3, 2, 3);
    let sol = solve_optimal(&mdp, SolveMethod::Auto, RVI_TOLERANCE).unwrap();
    let est = c_pl_estimate(&mdp, &sol.pi_star, &SearchBudget::new(1000, 2)).unwrap();
    let d_star = stationary_distribution(&kernel_under_policy(&mdp, &sol.pi_star).unwrap())
        .unwrap()
        .probs;
    for seed in 0..10_000 {
        let pi = Policy::random(3, 2, seed);
        let d = power_stationary(&induced_kernel(&mdp, &pi), 400);
        let ratio = (0..3).map(|s| d_star[s] / d[s]).fold(0.0, f64::max);
        assert!(ratio <= est.estimate.value * (1.0 + 1e-6));
    }
}

#[test]
fn empirical_smoothness_trivial_cases() {
    let mdp = action_independent(3, 3, 2);
    assert!(empirical_smoothness(&mdp, 200, 0).unwrap() < 1e-8);
    let mdp = TabularMdp::new(1, 3, vec![1.0; 3], vec![1.0, 0.0, 0.5]).unwrap();
    assert!(empirical_smoothness(&mdp, 200, 0).unwrap() < 1e-8);
}

#[test]
fn discounted_value_matches_truncated_series() {
    for seed in 0..10 {
        let mdp = random_mdp(4, 3, seed);
        let pi = Policy::random(4, 3, seed);
        let gamma: f64 = 0.9;
        let mu = uniform_initial(4);
        let p = induced_kernel(&mdp, &pi);
        let r = induced_reward(&mdp, &pi);
        let n = (1e-12f64.ln() / gamma.ln()).ceil() as usize;
        let mut row: Vec<f64> = mu.iter().copied().collect();
        let mut total = 0.0;
        let mut weight = 1.0;
        for _ in 0..=n {
            total += weight * row.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
            row = vec_mat(&row, &p);
            weight *= gamma;
        }
        let v = discounted_value(&mdp, &pi, gamma, &mu).unwrap();
        assert!((v.value - total).abs() < 1e-8);
        // Bellman residual of the state values.
        let pv = mat_vec(&p, v.state_values.as_slice());
        for s in 0..4 {
            assert!((v.state_values[s] - r[s] - gamma * pv[s]).abs() < 1e-10);
        }
        let occ = occupancy_measure(&mdp, &pi, gamma, &mu).unwrap();
        assert!((occ.d.sum() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn discounted_gradient_matches_central_differences() {
    let eps = 1e-6;
    for seed in 0..10 {
        let mdp = random_mdp(4, 3, seed);
        let pi = Policy::random(4, 3, seed + 9);
        let mu = uniform_initial(4);
        let g = discounted_gradient(&mdp, &pi, 0.8, &mu).unwrap();
        for k in 0..5 {
            let u = Direction::between(&pi, &Policy::random(4, 3, 300 + k)).unwrap();
            let v = |alpha: f64| {
                discounted_value(&mdp, &step_policy(&pi, &u, alpha).unwrap(), 0.8, &mu)
                    .unwrap()
                    .value
            };
            let fd = (v(eps) - v(-eps)) / (2.0 * eps);
            assert!(rel_err(frobenius_dot(&g, &u.u), fd) <= 1e-5);
        }
    }
}

#[test]
fn single_state_discounted_gradient_is_q_row() {
    let mdp = TabularMdp::new(1, 2, vec![1.0, 1.0], vec![1.0, 0.0]).unwrap();
    let pi = Policy::from_rows(&[vec![0.3, 0.7]]).unwrap();
    let gamma = 0.5;
    let g = discounted_gradient(&mdp, &pi, gamma, &uniform_initial(1)).unwrap();
    let v = 0.3 / (1.0 - gamma);
    // d = 1, so grad(a) = (r(a) + γV)/(1−γ).
    assert!((g[(0, 0)] - (1.0 + gamma * v) / (1.0 - gamma)).abs() < 1e-12);
    assert!((g[(0, 1)] - gamma * v / (1.0 - gamma)).abs() < 1e-12);
}

#[test]
fn oracle_closed_form_for_action_independent_kernel() {
    let base = action_independent(4, 3, 5);
    let reward: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 * 0.2 - 0.4).collect();
    let mdp = TabularMdp::new(4, 3, base.kernel_flat().to_vec(), reward).unwrap();
    let sol = solve_optimal(&mdp, SolveMethod::Auto, RVI_TOLERANCE).unwrap();
    let d = power_stationary(&induced_kernel(&mdp, &Policy::uniform(4, 3)), 4000);
    let expect: f64 = (0..4)
        .map(|s| d[s] * mdp.reward_row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum();
    assert!((sol.rho_star - expect).abs() < 1e-9);
}

#[test]
fn phi_times_centers_columns() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 6.0]);
    let c = phi_times(&m);
    assert_eq!(c, DMatrix::from_row_slice(2, 2, &[-1.0, -2.0, 1.0, 2.0]));
}
