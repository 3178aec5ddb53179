//! Default scenario geometry for the benchmark environments.
//!
//! The start state is always the origin at rest. The goal lies along the
//! all-ones direction with a constant per-dimension component of sqrt(2), so
//! the start-goal distance per dimension (and with it the reward scale of a
//! do-nothing rollout) is the same for every N; at N = 2 the goal has
//! Euclidean norm 2. Obstacles sit on the straight start-goal segment so an
//! unperturbed greedy path always collides.

use ndarray::Array1;

use super::{EnvSpec, Obstacle};
use crate::error::Result;

/// Soft-contact spring constant.
pub const SOFT_SPRING_K: f64 = 10.0;
/// Hard contact is ten times stiffer than soft contact.
pub const HARD_SPRING_K: f64 = 10.0 * SOFT_SPRING_K;
/// Default integration step.
pub const DEFAULT_DT: f64 = 0.05;
/// Default planning horizon.
pub const DEFAULT_HORIZON: usize = 30;
/// Default mass.
pub const DEFAULT_MASS: f64 = 1.0;
/// Base obstacle radius; the count-n corridor uses 0.5 / sqrt(n).
pub const BASE_OBSTACLE_RADIUS: f64 = 0.5;

/// Goal for an N-dimensional scenario: sqrt(2) along every axis.
pub fn default_goal(dim: usize) -> Array1<f64> {
    Array1::from_elem(dim, std::f64::consts::SQRT_2)
}

/// Overridable dynamics constants shared by both sweep geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvDefaults {
    pub horizon: usize,
    pub dt: f64,
    pub mass: f64,
    pub reward_scale: f64,
}

impl Default for EnvDefaults {
    fn default() -> Self {
        EnvDefaults {
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            mass: DEFAULT_MASS,
            reward_scale: 1.0,
        }
    }
}

/// Dimensionality-sweep environment: one soft-contact hypersphere of radius
/// 0.5 centered at the midpoint of the start-goal segment.
pub fn single_obstacle_env(dim: usize, spring_k: f64, defaults: EnvDefaults) -> Result<EnvSpec> {
    let goal = default_goal(dim);
    let midpoint = &goal * 0.5;
    let env = EnvSpec {
        dim,
        horizon: defaults.horizon,
        dt: defaults.dt,
        mass: defaults.mass,
        goal,
        obstacles: vec![Obstacle::new(midpoint, BASE_OBSTACLE_RADIUS)?],
        spring_k,
        reward_scale: defaults.reward_scale,
    };
    env.validate()?;
    Ok(env)
}

/// Obstacle-count environment: `count` spheres evenly spaced along the
/// start-goal segment (at fractions i/(count+1)), radius 0.5 / sqrt(count)
/// so more obstacles pack into the same corridor. `count = 1` coincides with
/// [`single_obstacle_env`] geometry.
pub fn obstacle_corridor_env(
    dim: usize,
    count: usize,
    spring_k: f64,
    defaults: EnvDefaults,
) -> Result<EnvSpec> {
    let goal = default_goal(dim);
    let radius = BASE_OBSTACLE_RADIUS / (count as f64).sqrt();
    let obstacles = (1..=count)
        .map(|i| {
            let frac = i as f64 / (count as f64 + 1.0);
            Obstacle::new(&goal * frac, radius)
        })
        .collect::<Result<Vec<_>>>()?;
    let env = EnvSpec {
        dim,
        horizon: defaults.horizon,
        dt: defaults.dt,
        mass: defaults.mass,
        goal,
        obstacles,
        spring_k,
        reward_scale: defaults.reward_scale,
    };
    env.validate()?;
    Ok(env)
}

/// Obstacle-free variant, used by the convex sanity checks.
pub fn free_env(dim: usize, defaults: EnvDefaults) -> Result<EnvSpec> {
    let env = EnvSpec {
        dim,
        horizon: defaults.horizon,
        dt: defaults.dt,
        mass: defaults.mass,
        goal: default_goal(dim),
        obstacles: vec![],
        spring_k: 0.0,
        reward_scale: defaults.reward_scale,
    };
    env.validate()?;
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_component_is_constant_across_dims() {
        for dim in [2, 5, 20] {
            let g = default_goal(dim);
            assert!(g.iter().all(|&x| (x - std::f64::consts::SQRT_2).abs() < 1e-15));
        }
        // At N=2 the goal norm is exactly 2.
        let g = default_goal(2);
        assert!((g.dot(&g).sqrt() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn corridor_count_one_matches_single_obstacle() {
        let a = single_obstacle_env(2, HARD_SPRING_K, EnvDefaults::default()).unwrap();
        let b = obstacle_corridor_env(2, 1, HARD_SPRING_K, EnvDefaults::default()).unwrap();
        assert_eq!(a.obstacles, b.obstacles);
    }

    #[test]
    fn corridor_radii_shrink_with_count() {
        for n in 1..=5 {
            let env = obstacle_corridor_env(2, n, HARD_SPRING_K, EnvDefaults::default()).unwrap();
            assert_eq!(env.obstacles.len(), n);
            let expected = BASE_OBSTACLE_RADIUS / (n as f64).sqrt();
            for o in &env.obstacles {
                assert!((o.radius - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn obstacles_block_the_straight_path() {
        let env = obstacle_corridor_env(2, 3, HARD_SPRING_K, EnvDefaults::default()).unwrap();
        for o in &env.obstacles {
            // center is on the segment from origin to goal
            let t = o.center[0] / env.goal[0];
            assert!(t > 0.0 && t < 1.0);
            assert!((o.center[1] / env.goal[1] - t).abs() < 1e-12);
        }
    }
}
