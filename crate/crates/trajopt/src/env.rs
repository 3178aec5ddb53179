//! Differentiable N-dimensional point-mass environment.
//!
//! A force-controlled mass moves toward a goal under semi-implicit Euler
//! integration. Spherical obstacles exert a repulsive spring force
//! proportional to penetration depth (soft contact; a larger spring constant
//! makes the contact harder). The reward is a dense negative squared distance
//! to the goal, so exact return gradients with respect to every action are
//! available by reverse accumulation through the rollout.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::sampling::ActionSequence;

pub mod scenarios;

/// Position and velocity of the controlled mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassState {
    pub position: Array1<f64>,
    pub velocity: Array1<f64>,
}

impl PointMassState {
    pub fn new(position: Array1<f64>, velocity: Array1<f64>) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(Error::Parameter(format!(
                "position dim {} != velocity dim {}",
                position.len(),
                velocity.len()
            )));
        }
        if !position.iter().chain(velocity.iter()).all(|x| x.is_finite()) {
            return Err(Error::Parameter("non-finite state entries".into()));
        }
        Ok(PointMassState { position, velocity })
    }

    /// The origin with zero velocity, the default start state.
    pub fn at_rest(dim: usize) -> Self {
        PointMassState {
            position: Array1::zeros(dim),
            velocity: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

/// A spherical soft-contact obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub center: Array1<f64>,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(center: Array1<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Parameter(format!("obstacle radius {radius} must be > 0")));
        }
        Ok(Obstacle { center, radius })
    }
}

/// Environment definition: geometry, dynamics constants and reward scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    /// State/action dimension N.
    pub dim: usize,
    /// Planning horizon H (steps per rollout).
    pub horizon: usize,
    /// Integration step (time units).
    pub dt: f64,
    /// Mass of the controlled point.
    pub mass: f64,
    pub goal: Array1<f64>,
    pub obstacles: Vec<Obstacle>,
    /// Contact spring constant (force per unit penetration depth).
    pub spring_k: f64,
    pub reward_scale: f64,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Parameter("dim must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Parameter("horizon must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Parameter(format!("dt={} must be > 0", self.dt)));
        }
        if !(self.mass > 0.0) {
            return Err(Error::Parameter(format!("mass={} must be > 0", self.mass)));
        }
        if self.goal.len() != self.dim {
            return Err(Error::Parameter(format!(
                "goal dim {} != env dim {}",
                self.goal.len(),
                self.dim
            )));
        }
        if !(self.spring_k >= 0.0) {
            return Err(Error::Parameter(format!("spring_k={} must be >= 0", self.spring_k)));
        }
        if !(self.reward_scale >= 0.0) {
            return Err(Error::Parameter(format!(
                "reward_scale={} must be >= 0",
                self.reward_scale
            )));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.center.len() != self.dim {
                return Err(Error::Parameter(format!(
                    "obstacle {} center dim {} != env dim {}",
                    i,
                    o.center.len(),
                    self.dim
                )));
            }
            if !(o.radius > 0.0) {
                return Err(Error::Parameter(format!("obstacle {i} radius must be > 0")));
            }
        }
        Ok(())
    }
}

/// States visited by a rollout (`s_1..s_H`) and their summed reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub states: Vec<PointMassState>,
    pub total_return: f64,
}

/// d(total return)/d(actions), same H x N shape as the rolled-out sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnGradient {
    pub grad: Array2<f64>,
}

/// Repulsive spring force exerted by one obstacle at `position`.
///
/// With `u = position - center` and penetration `d = max(0, radius - |u|)`,
/// the force is `spring_k * d * u / |u|`; zero outside the obstacle and, by
/// convention, exactly at the center.
pub fn contact_force(position: &Array1<f64>, obstacle: &Obstacle, spring_k: f64) -> Array1<f64> {
    let u = position - &obstacle.center;
    let norm = u.dot(&u).sqrt();
    if norm == 0.0 || norm >= obstacle.radius {
        return Array1::zeros(position.len());
    }
    let depth = obstacle.radius - norm;
    u * (spring_k * depth / norm)
}

/// Total external force at `position`: the applied action plus every
/// obstacle's contact force.
fn total_force(position: &Array1<f64>, action: &Array1<f64>, env: &EnvSpec) -> Array1<f64> {
    let mut f = action.clone();
    for o in &env.obstacles {
        f += &contact_force(position, o, env.spring_k);
    }
    f
}

/// One semi-implicit Euler step: velocity updates first, then position uses
/// the updated velocity.
pub fn step(state: &PointMassState, action: &Array1<f64>, env: &EnvSpec) -> PointMassState {
    let f = total_force(&state.position, action, env);
    let velocity = &state.velocity + &(f * (env.dt / env.mass));
    let position = &state.position + &(&velocity * env.dt);
    PointMassState { position, velocity }
}

/// Dense reward: `-reward_scale * |position - goal|^2 / N`. Maximum 0 at the
/// goal; higher is better.
pub fn reward(state: &PointMassState, env: &EnvSpec) -> f64 {
    let d = &state.position - &env.goal;
    -env.reward_scale * d.dot(&d) / env.dim as f64
}

fn reward_position_grad(position: &Array1<f64>, env: &EnvSpec) -> Array1<f64> {
    (position - &env.goal) * (-2.0 * env.reward_scale / env.dim as f64)
}

fn check_rollout_args(env: &EnvSpec, s0: &PointMassState, actions: &ActionSequence) -> Result<()> {
    if actions.horizon() != env.horizon || actions.dim() != env.dim {
        return Err(Error::Parameter(format!(
            "action sequence shape ({}, {}) does not match env (H={}, N={})",
            actions.horizon(),
            actions.dim(),
            env.horizon,
            env.dim
        )));
    }
    if s0.dim() != env.dim {
        return Err(Error::Parameter(format!(
            "start state dim {} != env dim {}",
            s0.dim(),
            env.dim
        )));
    }
    Ok(())
}

/// Roll the action sequence out from `s0`, recording the visited states and
/// the summed reward over `s_1..s_H`.
pub fn rollout(env: &EnvSpec, s0: &PointMassState, actions: &ActionSequence) -> Result<RolloutResult> {
    check_rollout_args(env, s0, actions)?;
    let mut states = Vec::with_capacity(env.horizon);
    let mut total_return = 0.0;
    let mut state = s0.clone();
    for h in 0..env.horizon {
        state = step(&state, &actions.actions.row(h).to_owned(), env);
        total_return += reward(&state, env);
        states.push(state.clone());
    }
    Ok(RolloutResult { states, total_return })
}

/// Rollout plus the exact return gradient with respect to every action,
/// computed by reverse accumulation through the step and reward maps.
///
/// The forward pass is [`rollout`] itself, so the returned scalar matches it
/// bit for bit. On the contact boundary (penetration exactly zero) the
/// contact Jacobian contribution is taken as zero.
pub fn rollout_with_grad(
    env: &EnvSpec,
    s0: &PointMassState,
    actions: &ActionSequence,
) -> Result<(f64, ReturnGradient)> {
    let fwd = rollout(env, s0, actions)?;
    let h_total = env.horizon;
    let dt = env.dt;
    let inv_m = 1.0 / env.mass;

    let mut grad = Array2::<f64>::zeros((h_total, env.dim));
    // Adjoints of the state *entering* step h (position p_h, velocity v_h).
    let mut lambda_p = reward_position_grad(&fwd.states[h_total - 1].position, env);
    let mut lambda_v = Array1::<f64>::zeros(env.dim);

    for h in (0..h_total).rev() {
        // p_{h+1} = p_h + dt v_h + dt^2/m (a_h + C(p_h))
        // v_{h+1} = v_h + dt/m (a_h + C(p_h))
        let tmp = &(&lambda_p * dt) + &lambda_v; // dR/dv_h
        grad.row_mut(h).assign(&(&tmp * (dt * inv_m)));

        let p_h = if h == 0 { &s0.position } else { &fwd.states[h - 1].position };
        let mut next_p = lambda_p;
        next_p += &(contact_jacobian_vec(p_h, env, &tmp) * (dt * inv_m));
        if h >= 1 {
            next_p += &reward_position_grad(p_h, env);
        }
        lambda_p = next_p;
        lambda_v = tmp;
    }

    Ok((fwd.total_return, ReturnGradient { grad }))
}

/// Product of the summed contact-force Jacobian at `position` with `w`,
/// computed without materializing the N x N matrix.
///
/// Inside an obstacle the single-obstacle Jacobian is
/// `k * [(r/|u| - 1) I - (r/|u|^3) u u^T]`; it vanishes outside and on the
/// boundary.
fn contact_jacobian_vec(position: &Array1<f64>, env: &EnvSpec, w: &Array1<f64>) -> Array1<f64> {
    let mut out = Array1::<f64>::zeros(position.len());
    for o in &env.obstacles {
        let u = position - &o.center;
        let norm = u.dot(&u).sqrt();
        if norm == 0.0 || norm >= o.radius {
            continue;
        }
        let ratio = o.radius / norm;
        let uw = u.dot(w);
        out += &(w * (env.spring_k * (ratio - 1.0)));
        out -= &(&u * (env.spring_k * ratio / (norm * norm) * uw));
    }
    out
}

/// Central-difference return gradient, the independent oracle for
/// [`rollout_with_grad`]. Entry `(t, n)` is
/// `[R(a + h e_tn) - R(a - h e_tn)] / 2h` using the forward rollout only.
pub fn finite_diff_grad(
    env: &EnvSpec,
    s0: &PointMassState,
    actions: &ActionSequence,
    h: f64,
) -> Result<ReturnGradient> {
    check_rollout_args(env, s0, actions)?;
    let mut grad = Array2::<f64>::zeros(actions.actions.dim());
    let mut perturbed = actions.clone();
    for t in 0..actions.horizon() {
        for n in 0..actions.dim() {
            let orig = perturbed.actions[[t, n]];
            perturbed.actions[[t, n]] = orig + h;
            let plus = rollout(env, s0, &perturbed)?.total_return;
            perturbed.actions[[t, n]] = orig - h;
            let minus = rollout(env, s0, &perturbed)?.total_return;
            perturbed.actions[[t, n]] = orig;
            grad[[t, n]] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(ReturnGradient { grad })
}

/// Default central-difference step (action units).
pub const FD_STEP: f64 = 1e-5;

/// Max-norm relative error between two gradients, the agreement metric for
/// the oracle checks.
pub fn max_relative_error(a: &ReturnGradient, b: &ReturnGradient) -> f64 {
    let diff = (&a.grad - &b.grad).iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let scale = b.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    diff / scale.max(1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn free_env(dim: usize, horizon: usize) -> EnvSpec {
        EnvSpec {
            dim,
            horizon,
            dt: 0.1,
            mass: 1.0,
            goal: Array1::ones(dim),
            obstacles: vec![],
            spring_k: 0.0,
            reward_scale: 1.0,
        }
    }

    #[test]
    fn contact_force_outside_is_zero() {
        let o = Obstacle::new(array![0.0, 0.0], 1.0).unwrap();
        let f = contact_force(&array![2.0, 0.0], &o, 3.0);
        assert_eq!(f, array![0.0, 0.0]);
        // Exactly on the boundary: zero penetration.
        let f = contact_force(&array![1.0, 0.0], &o, 3.0);
        assert_eq!(f, array![0.0, 0.0]);
    }

    #[test]
    fn contact_force_hand_example() {
        let o = Obstacle::new(array![0.0, 0.0], 1.0).unwrap();
        let f = contact_force(&array![0.5, 0.0], &o, 1.0);
        assert!((f[0] - 0.5).abs() < 1e-15);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn contact_force_at_center_is_zero() {
        let o = Obstacle::new(array![0.25, -0.5], 1.0).unwrap();
        let f = contact_force(&array![0.25, -0.5], &o, 10.0);
        assert_eq!(f, array![0.0, 0.0]);
    }

    #[test]
    fn contact_force_is_continuous_at_boundary() {
        // Jump in force norm across the boundary is at most spring_k * delta.
        let o = Obstacle::new(array![0.3, -0.1, 0.2], 0.7).unwrap();
        let spring_k = 50.0;
        let delta = 1e-6;
        let mut r = crate::rng::RngStream::new(17).rng();
        for _ in 0..50 {
            let dir: Array1<f64> = {
                use rand_distr::{Distribution, StandardNormal};
                let v: Vec<f64> =
                    (0..3).map(|_| StandardNormal.sample(&mut r)).collect();
                let v = Array1::from_vec(v);
                let n = v.dot(&v).sqrt();
                v / n
            };
            let inside = &o.center + &(&dir * (o.radius - delta / 2.0));
            let outside = &o.center + &(&dir * (o.radius + delta / 2.0));
            let fi = contact_force(&inside, &o, spring_k);
            let fo = contact_force(&outside, &o, spring_k);
            let jump = (&fi - &fo).dot(&(&fi - &fo)).sqrt();
            assert!(jump <= spring_k * delta * (1.0 + 1e-9), "jump {jump}");
        }
    }

    #[test]
    fn step_fixed_point_without_forces() {
        let env = EnvSpec { goal: array![5.0], ..free_env(1, 1) };
        let s = PointMassState::at_rest(1);
        let next = step(&s, &array![0.0], &env);
        assert_eq!(next, s);
    }

    #[test]
    fn step_hand_example() {
        let env = free_env(1, 1);
        let s = PointMassState::at_rest(1);
        let next = step(&s, &array![1.0], &env);
        assert!((next.velocity[0] - 0.1).abs() < 1e-15);
        assert!((next.position[0] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn step_penetration_adds_outward_velocity() {
        let mut env = free_env(2, 1);
        env.spring_k = 4.0;
        env.obstacles = vec![Obstacle::new(array![0.0, 0.0], 1.0).unwrap()];
        let s = PointMassState::new(array![0.5, 0.0], array![0.0, 0.0]).unwrap();
        let next = step(&s, &array![0.0, 0.0], &env);
        // contact force (2.0, 0.0): d=0.5, direction (1,0), k=4
        assert!((next.velocity[0] - env.dt * 2.0).abs() < 1e-15);
        assert_eq!(next.velocity[1], 0.0);
    }

    #[test]
    fn reward_examples() {
        let env = EnvSpec { goal: array![1.0, 1.0], ..free_env(2, 1) };
        let at_goal = PointMassState::new(array![1.0, 1.0], array![0.0, 0.0]).unwrap();
        assert_eq!(reward(&at_goal, &env), 0.0);
        let at_origin = PointMassState::at_rest(2);
        assert!((reward(&at_origin, &env) + 1.0).abs() < 1e-15);
        let flat = EnvSpec { reward_scale: 0.0, ..env };
        assert_eq!(reward(&at_origin, &flat), 0.0);
    }

    #[test]
    fn rollout_single_step_unrolls() {
        let env = free_env(1, 1);
        let s0 = PointMassState::at_rest(1);
        let a = ActionSequence::new(array![[2.0]]).unwrap();
        let r = rollout(&env, &s0, &a).unwrap();
        let s1 = step(&s0, &array![2.0], &env);
        assert_eq!(r.total_return, reward(&s1, &env));
        assert_eq!(r.states.len(), 1);
    }

    #[test]
    fn rollout_at_goal_is_zero_return() {
        let env = EnvSpec { goal: array![0.0, 0.0], ..free_env(2, 8) };
        let s0 = PointMassState::at_rest(2);
        let a = ActionSequence::zeros(8, 2);
        let r = rollout(&env, &s0, &a).unwrap();
        assert_eq!(r.total_return, 0.0);
    }

    #[test]
    fn rollout_return_matches_stored_states() {
        let env = EnvSpec {
            obstacles: vec![Obstacle::new(array![0.4, 0.4], 0.5).unwrap()],
            spring_k: 10.0,
            ..free_env(2, 12)
        };
        let s0 = PointMassState::at_rest(2);
        let a = sample_some(&env, 3);
        let r = rollout(&env, &s0, &a).unwrap();
        let resummed: f64 = r.states.iter().map(|s| reward(s, &env)).sum();
        assert_eq!(r.total_return, resummed);
    }

    #[test]
    fn rollout_shape_mismatch_is_error() {
        let env = free_env(2, 4);
        let s0 = PointMassState::at_rest(2);
        let a = ActionSequence::zeros(4, 3);
        assert!(matches!(rollout(&env, &s0, &a), Err(Error::Parameter(_))));
    }

    #[test]
    fn zero_reward_scale_gives_zero_gradient() {
        let env = EnvSpec { reward_scale: 0.0, ..free_env(2, 6) };
        let s0 = PointMassState::at_rest(2);
        let a = sample_some(&env, 1);
        let (ret, g) = rollout_with_grad(&env, &s0, &a).unwrap();
        assert_eq!(ret, 0.0);
        assert!(g.grad.iter().all(|&x| x == 0.0));
        let fd = finite_diff_grad(&env, &s0, &a, FD_STEP).unwrap();
        assert!(fd.grad.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_step_gradient_closed_form() {
        // H=1, N=1, no obstacles: dR/da_0 = -2 rs dt^2 (p_1 - g)
        let env = EnvSpec { goal: array![1.0], reward_scale: 1.3, ..free_env(1, 1) };
        let s0 = PointMassState::new(array![0.2], array![0.3]).unwrap();
        let a = ActionSequence::new(array![[2.0]]).unwrap();
        let (ret, g) = rollout_with_grad(&env, &s0, &a).unwrap();
        let p1 = 0.2 + 0.1 * (0.3 + 0.1 * 2.0);
        assert!((ret + 1.3 * (p1 - 1.0) * (p1 - 1.0)).abs() < 1e-15);
        let expected = -2.0 * 1.3 * 0.1 * 0.1 * (p1 - 1.0);
        assert!((g.grad[[0, 0]] - expected).abs() < 1e-14);
    }

    #[test]
    fn forward_value_matches_rollout_bitwise() {
        let env = EnvSpec {
            obstacles: vec![Obstacle::new(array![0.3, 0.3], 0.4).unwrap()],
            spring_k: 25.0,
            ..free_env(2, 10)
        };
        let s0 = PointMassState::at_rest(2);
        let a = sample_some(&env, 7);
        let (ret, _) = rollout_with_grad(&env, &s0, &a).unwrap();
        assert_eq!(ret, rollout(&env, &s0, &a).unwrap().total_return);
    }

    #[test]
    fn quadratic_objective_finite_difference_is_near_exact() {
        // With no obstacles the return is quadratic in the actions, so the
        // central difference is exact up to roundoff.
        let env = free_env(1, 1);
        let s0 = PointMassState::new(array![0.3], array![-0.2]).unwrap();
        let a = ActionSequence::new(array![[0.7]]).unwrap();
        let (_, g) = rollout_with_grad(&env, &s0, &a).unwrap();
        let fd = finite_diff_grad(&env, &s0, &a, FD_STEP).unwrap();
        assert!(max_relative_error(&g, &fd) < 1e-9);
    }

    #[test]
    fn adjoint_matches_finite_difference_with_contact() {
        let env = EnvSpec {
            dim: 2,
            horizon: 15,
            dt: 0.08,
            mass: 1.3,
            goal: array![1.2, 0.9],
            obstacles: vec![
                Obstacle::new(array![0.5, 0.45], 0.45).unwrap(),
                Obstacle::new(array![-0.2, 0.3], 0.3).unwrap(),
            ],
            spring_k: 20.0,
            reward_scale: 0.8,
        };
        let s0 = PointMassState::new(array![0.0, 0.0], array![0.4, 0.1]).unwrap();
        let a = sample_some(&env, 13);
        let (_, g) = rollout_with_grad(&env, &s0, &a).unwrap();
        let fd = finite_diff_grad(&env, &s0, &a, FD_STEP).unwrap();
        assert!(
            max_relative_error(&g, &fd) < 1e-5,
            "relative error {}",
            max_relative_error(&g, &fd)
        );
    }

    #[test]
    fn speed_constant_without_forces_or_reward() {
        let env = EnvSpec { reward_scale: 0.0, spring_k: 0.0, ..free_env(3, 20) };
        let s0 = PointMassState::new(array![0.0, 0.0, 0.0], array![0.3, -0.4, 0.1]).unwrap();
        let speed0 = s0.velocity.dot(&s0.velocity).sqrt();
        let r = rollout(&env, &s0, &ActionSequence::zeros(20, 3)).unwrap();
        for s in &r.states {
            let speed = s.velocity.dot(&s.velocity).sqrt();
            assert!((speed - speed0).abs() < 1e-12);
        }
    }

    #[test]
    fn rollout_is_deterministic() {
        let env = EnvSpec {
            obstacles: vec![Obstacle::new(array![0.4, 0.2], 0.5).unwrap()],
            spring_k: 10.0,
            ..free_env(2, 10)
        };
        let s0 = PointMassState::at_rest(2);
        let a = sample_some(&env, 2);
        let r1 = rollout(&env, &s0, &a).unwrap();
        let r2 = rollout(&env, &s0, &a).unwrap();
        assert_eq!(r1, r2);
    }

    fn sample_some(env: &EnvSpec, seed: u64) -> ActionSequence {
        use crate::rng::RngStream;
        use crate::sampling::{sample_action_sequences, GaussianPlanDistribution};
        let dist = GaussianPlanDistribution::standard(env.horizon, env.dim);
        sample_action_sequences(&dist, 1, &RngStream::new(seed))
            .unwrap()
            .pop()
            .unwrap()
    }
}
