// Scratch calibration runs for the acceptance thresholds. Not part of the
// public surface; removed once thresholds are frozen.

use ndarray::array;
use trajopt::env::{rollout, EnvSpec, PointMassState};
use trajopt::planners::{cem_plan, grad_plan, gradcem_plan};
use trajopt::rng::RngStream;
use trajopt::sampling::{ActionSequence, PlannerParams};

fn convex_env() -> EnvSpec {
    EnvSpec {
        dim: 1,
        horizon: 5,
        dt: 0.5,
        mass: 1.0,
        goal: array![0.5],
        obstacles: vec![],
        spring_k: 0.0,
        reward_scale: 1.0,
    }
}

fn main() {
    let env = convex_env();
    let s0 = PointMassState::at_rest(1);
    let baseline = rollout(&env, &s0, &ActionSequence::zeros(env.horizon, env.dim))
        .unwrap()
        .total_return;
    let threshold = 0.05 * baseline; // optimal ~ 0
    println!("baseline {baseline}, threshold {threshold}");

    for (t, g, k) in [(60, 64, 8), (60, 128, 16), (100, 64, 8), (60, 128, 8), (80, 200, 20)] {
        let params = PlannerParams { t, g, k, j: 1, beta: 0.1, ..Default::default() };
        let mut worst = [f64::INFINITY; 3];
        let mut iters = [Vec::new(), Vec::new(), Vec::new()];
        for seed in 0..20u64 {
            let rng = RngStream::new(seed);
            let outs = [
                cem_plan(&env, &s0, &params, &rng).unwrap(),
                grad_plan(&env, &s0, &params, &rng).unwrap(),
                gradcem_plan(&env, &s0, &params, &rng).unwrap(),
            ];
            for (i, o) in outs.iter().enumerate() {
                worst[i] = worst[i].min(o.best_return);
                let it = o
                    .trace
                    .iter()
                    .position(|x| x.best_return >= threshold)
                    .map(|i| i + 1)
                    .unwrap_or(t + 1);
                iters[i].push(it);
            }
        }
        let med = |v: &mut Vec<usize>| {
            v.sort_unstable();
            v[v.len() / 2]
        };
        println!(
            "T={t:3} G={g:3} K={k:2}: worst cem {:.5} grad {:.5} gradcem {:.5} | med iters cem {} grad {} gradcem {}",
            worst[0],
            worst[1],
            worst[2],
            med(&mut iters[0]),
            med(&mut iters[1]),
            med(&mut iters[2]),
        );
    }
}
