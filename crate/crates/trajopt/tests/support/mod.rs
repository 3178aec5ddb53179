//! Shared test support: a finite-horizon linear-quadratic dynamic-programming
//! oracle for the obstacle-free environment.
//!
//! The oracle never calls the environment's own rollout; it rebuilds the
//! linear dynamics and quadratic stage cost from the raw `EnvSpec` constants
//! and solves the problem by backward value iteration, so agreement with the
//! planners is evidence, not circularity.

use nalgebra::{DMatrix, DVector};
use trajopt::env::{EnvSpec, PointMassState};

/// Optimal-control solution of the quadratic tracking problem.
pub struct LqSolution {
    /// Maximum attainable return (the negative optimal cost).
    pub optimal_return: f64,
    /// One optimal open-loop action sequence, H rows of N entries.
    pub actions: Vec<Vec<f64>>,
}

/// Solve `max_a  sum_h -rs/N |p_h - g|^2` for the no-obstacle point mass by
/// backward dynamic programming over quadratic value functions.
///
/// Panics if the environment has obstacles (the problem is then not
/// linear-quadratic).
pub fn lq_optimal(env: &EnvSpec, s0: &PointMassState) -> LqSolution {
    assert!(env.obstacles.is_empty(), "LQ oracle requires a no-obstacle env");
    let n = env.dim;
    let dt = env.dt;
    let inv_m = 1.0 / env.mass;
    let h_total = env.horizon;

    // State [p; v]: p' = p + dt v + dt^2/m a, v' = v + dt/m a.
    let mut a_mat = DMatrix::<f64>::identity(2 * n, 2 * n);
    for i in 0..n {
        a_mat[(i, n + i)] = dt;
    }
    let mut b_mat = DMatrix::<f64>::zeros(2 * n, n);
    for i in 0..n {
        b_mat[(i, i)] = dt * dt * inv_m;
        b_mat[(n + i, i)] = dt * inv_m;
    }
    // Stage cost (p - g)^T Q (p - g) on arrival states, Q = rs/N I.
    let q_scale = env.reward_scale / n as f64;
    let mut q_hat = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        q_hat[(i, i)] = q_scale;
    }
    let mut goal_vec = DVector::<f64>::zeros(2 * n);
    for i in 0..n {
        goal_vec[i] = env.goal[i];
    }
    let const_cost = {
        let gq = &q_hat * &goal_vec;
        (goal_vec.transpose() * gq)[(0, 0)]
    };

    // Quadratic cost-to-go W(s) = s^T P s + 2 q^T s + r.
    let mut p = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut q = DVector::<f64>::zeros(2 * n);
    let mut r = 0.0;
    let mut gains: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(h_total);

    for _ in 0..h_total {
        // Cost of the arrival state plus cost-to-go from it.
        let p_tilde = &p + &q_hat;
        let q_tilde = &q - &q_hat * &goal_vec;
        let r_tilde = r + const_cost;

        // Minimize over the action: (B^T Pt B) a = -B^T (Pt A s + qt).
        let hessian = b_mat.transpose() * &p_tilde * &b_mat;
        let hess_inv = hessian
            .clone()
            .try_inverse()
            .expect("action Hessian is positive definite for rs > 0");
        let k_gain = -&hess_inv * b_mat.transpose() * &p_tilde * &a_mat;
        let k_bias = -&hess_inv * b_mat.transpose() * &q_tilde;

        let a_cl = &a_mat + &b_mat * &k_gain;
        let d = &b_mat * &k_bias;

        let p_next = a_cl.transpose() * &p_tilde * &a_cl;
        let q_next = a_cl.transpose() * (&p_tilde * &d + &q_tilde);
        let r_next = (d.transpose() * &p_tilde * &d)[(0, 0)]
            + 2.0 * q_tilde.dot(&d)
            + r_tilde;

        gains.push((k_gain, k_bias));
        p = p_next;
        q = q_next;
        r = r_next;
    }
    gains.reverse(); // gains[h] now applies at step h

    let mut state = DVector::<f64>::zeros(2 * n);
    for i in 0..n {
        state[i] = s0.position[i];
        state[n + i] = s0.velocity[i];
    }
    let optimal_cost = (state.transpose() * &p * &state)[(0, 0)] + 2.0 * q.dot(&state) + r;

    let mut actions = Vec::with_capacity(h_total);
    let mut s = state;
    for (k_gain, k_bias) in &gains {
        let a = k_gain * &s + k_bias;
        actions.push(a.iter().copied().collect());
        s = &a_mat * &s + &b_mat * &a;
    }

    LqSolution { optimal_return: -optimal_cost, actions }
}

/// Independent second route to the optimal cost: stack the position response
/// `p = M a + p_free` (M square and invertible), so the minimum tracking cost
/// solves a linear system. Used to cross-check the DP recursion.
pub fn lq_optimal_return_linear_solve(env: &EnvSpec, s0: &PointMassState) -> f64 {
    assert!(env.obstacles.is_empty());
    let n = env.dim;
    let h_total = env.horizon;
    let dt = env.dt;
    let inv_m = 1.0 / env.mass;

    // p_h = p0 + h dt v0 + dt^2/m sum_{k<h} (h - k) a_k
    let dim = h_total * n;
    let mut m_mat = DMatrix::<f64>::zeros(dim, dim);
    for h in 1..=h_total {
        for k in 0..h {
            let coeff = dt * dt * inv_m * (h - k) as f64;
            for i in 0..n {
                m_mat[((h - 1) * n + i, k * n + i)] = coeff;
            }
        }
    }
    let mut rhs = DVector::<f64>::zeros(dim);
    for h in 1..=h_total {
        for i in 0..n {
            rhs[(h - 1) * n + i] =
                env.goal[i] - s0.position[i] - h as f64 * dt * s0.velocity[i];
        }
    }
    let sol = m_mat.clone().lu().solve(&rhs).expect("position response is invertible");
    let residual = &m_mat * &sol - &rhs;
    -(env.reward_scale / n as f64) * residual.norm_squared()
}
