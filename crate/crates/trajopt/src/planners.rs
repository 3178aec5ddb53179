//! The three planning algorithms under comparison.
//!
//! * [`cem_plan`] — cross-entropy method: sample, evaluate, refit to elites.
//! * [`grad_plan`] — pure gradient ascent on a fixed set of initial samples.
//! * [`gradcem_plan`] — the hybrid: each iteration first refines every
//!   sequence with `j` gradient-ascent steps, then re-evaluates, refits the
//!   sampling distribution to the top `k`, keeps those elites and replaces
//!   the rest with fresh samples.
//!
//! All three consume randomness through the same substream keys
//! (`"init"` for the initial population, `"resample"/iteration` for
//! replacements), so runs with a common seed share their initial populations
//! and `gradcem_plan` with `j = 0` reduces to `cem_plan` exactly.

use crate::env::{rollout, rollout_with_grad, EnvSpec, PointMassState, ReturnGradient};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampling::{
    fit_elites, sample_action_sequences, sort_indices_by_return, ActionSequence,
    GaussianPlanDistribution, PlannerParams,
};

/// Which planner to run; used by the control loop, benchmarks and CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlannerKind {
    Cem,
    Grad,
    GradCem,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Cem, PlannerKind::Grad, PlannerKind::GradCem];

    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::Cem => "cem",
            PlannerKind::Grad => "grad",
            PlannerKind::GradCem => "gradcem",
        }
    }

    pub fn plan(
        &self,
        env: &EnvSpec,
        s0: &PointMassState,
        params: &PlannerParams,
        rng: &RngStream,
    ) -> Result<PlanOutcome> {
        match self {
            PlannerKind::Cem => cem_plan(env, s0, params, rng),
            PlannerKind::Grad => grad_plan(env, s0, params, rng),
            PlannerKind::GradCem => gradcem_plan(env, s0, params, rng),
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cem" => Ok(PlannerKind::Cem),
            "grad" => Ok(PlannerKind::Grad),
            "gradcem" => Ok(PlannerKind::GradCem),
            other => Err(Error::Config(format!(
                "unknown planner '{other}' (expected cem, grad or gradcem)"
            ))),
        }
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Best and mean population return of one iteration, measured after that
/// iteration's action updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub best_return: f64,
    pub mean_return: f64,
}

/// Result of one planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub best_actions: ActionSequence,
    /// Model return of `best_actions`; recomputing the rollout reproduces it.
    pub best_return: f64,
    /// One entry per iteration.
    pub trace: Vec<IterationStats>,
}

/// Per-iteration internals exposed for diagnostics and invariant tests.
#[derive(Debug, Clone)]
pub struct IterationDetail {
    /// Post-update returns in population order.
    pub returns: Vec<f64>,
    /// Population indices sorted by descending return.
    pub order: Vec<usize>,
    /// Indices carried into the next population (empty after the last
    /// iteration and for planners that never resample).
    pub retained: Vec<usize>,
    /// The refit sampling distribution, where the planner maintains one.
    pub refit: Option<GaussianPlanDistribution>,
}

/// One gradient-ascent step: `actions + beta * grad`, elementwise.
pub fn sgd_ascent_step(
    actions: &ActionSequence,
    grad: &ReturnGradient,
    beta: f64,
) -> Result<ActionSequence> {
    if actions.actions.dim() != grad.grad.dim() {
        return Err(Error::Parameter(format!(
            "gradient shape {:?} does not match actions {:?}",
            grad.grad.dim(),
            actions.actions.dim()
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("beta={beta} must be > 0")));
    }
    ActionSequence::new(&actions.actions + &(&grad.grad * beta))
}

/// Scale the gradient down to `max_norm` when its Frobenius norm exceeds it.
fn clip_gradient(grad: ReturnGradient, max_norm: Option<f64>) -> ReturnGradient {
    match max_norm {
        Some(cap) => {
            let norm = grad.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > cap {
                ReturnGradient { grad: grad.grad * (cap / norm) }
            } else {
                grad
            }
        }
        None => grad,
    }
}

fn evaluate(env: &EnvSpec, s0: &PointMassState, pop: &[ActionSequence]) -> Result<Vec<f64>> {
    pop.iter()
        .map(|a| rollout(env, s0, a).map(|r| r.total_return))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `j` gradient-ascent refinements applied to every sequence in place.
fn refine_population(
    env: &EnvSpec,
    s0: &PointMassState,
    pop: &mut [ActionSequence],
    params: &PlannerParams,
) -> Result<()> {
    for _ in 0..params.j {
        for seq in pop.iter_mut() {
            let (_, grad) = rollout_with_grad(env, s0, seq)?;
            let grad = clip_gradient(grad, params.grad_clip);
            *seq = sgd_ascent_step(seq, &grad, params.beta)?;
        }
    }
    Ok(())
}

/// Shared sample-evaluate-refit iteration body for the CEM and hybrid loops.
/// Returns the next population, or the final outcome on the last iteration.
fn cem_iteration(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
    t: usize,
    pop: Vec<ActionSequence>,
    trace: &mut Vec<IterationStats>,
    details: &mut Vec<IterationDetail>,
) -> Result<std::result::Result<Vec<ActionSequence>, PlanOutcome>> {
    let returns = evaluate(env, s0, &pop)?;
    let order = sort_indices_by_return(&returns)?;
    let refit = fit_elites(&pop, &returns, params.k)?;
    trace.push(IterationStats {
        best_return: returns[order[0]],
        mean_return: mean(&returns),
    });

    if t == params.t {
        details.push(IterationDetail {
            returns: returns.clone(),
            order: order.clone(),
            retained: Vec::new(),
            refit: Some(refit),
        });
        let best = order[0];
        return Ok(Err(PlanOutcome {
            best_actions: pop[best].clone(),
            best_return: returns[best],
            trace: std::mem::take(trace),
        }));
    }

    let resample_rng = rng.child("resample").index(t as u64);
    let (next, retained) = if params.retain_elites {
        let mut next: Vec<ActionSequence> =
            order[..params.k].iter().map(|&i| pop[i].clone()).collect();
        if params.g > params.k {
            next.extend(sample_action_sequences(&refit, params.g - params.k, &resample_rng)?);
        }
        (next, order[..params.k].to_vec())
    } else {
        (sample_action_sequences(&refit, params.g, &resample_rng)?, Vec::new())
    };
    details.push(IterationDetail { returns, order, retained, refit: Some(refit) });
    Ok(Ok(next))
}

/// Cross-entropy planning with per-iteration elite refit.
pub fn cem_plan(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
) -> Result<PlanOutcome> {
    cem_plan_detailed(env, s0, params, rng).map(|(outcome, _)| outcome)
}

/// [`cem_plan`] plus per-iteration internals.
pub fn cem_plan_detailed(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
) -> Result<(PlanOutcome, Vec<IterationDetail>)> {
    let init = GaussianPlanDistribution::standard(env.horizon, env.dim);
    cem_plan_from(env, s0, params, rng, init)
}

fn cem_plan_from(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
    init: GaussianPlanDistribution,
) -> Result<(PlanOutcome, Vec<IterationDetail>)> {
    params.validate()?;
    env.validate()?;
    let mut pop = sample_action_sequences(&init, params.g, &rng.child("init"))?;
    let mut trace = Vec::with_capacity(params.t);
    let mut details = Vec::with_capacity(params.t);
    for t in 1..=params.t {
        match cem_iteration(env, s0, params, rng, t, pop, &mut trace, &mut details)? {
            Ok(next) => pop = next,
            Err(outcome) => return Ok((outcome, details)),
        }
    }
    unreachable!("loop always returns on t == params.t")
}

/// The hybrid planner: `j` gradient refinements of every sequence inside
/// each cross-entropy iteration.
pub fn gradcem_plan(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
) -> Result<PlanOutcome> {
    gradcem_plan_detailed(env, s0, params, rng).map(|(outcome, _)| outcome)
}

/// [`gradcem_plan`] plus per-iteration internals.
pub fn gradcem_plan_detailed(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
) -> Result<(PlanOutcome, Vec<IterationDetail>)> {
    let init = GaussianPlanDistribution::standard(env.horizon, env.dim);
    gradcem_plan_from(env, s0, params, rng, init)
}

fn gradcem_plan_from(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
    init: GaussianPlanDistribution,
) -> Result<(PlanOutcome, Vec<IterationDetail>)> {
    params.validate()?;
    env.validate()?;
    let mut pop = sample_action_sequences(&init, params.g, &rng.child("init"))?;
    let mut trace = Vec::with_capacity(params.t);
    let mut details = Vec::with_capacity(params.t);
    for t in 1..=params.t {
        refine_population(env, s0, &mut pop, params)?;
        match cem_iteration(env, s0, params, rng, t, pop, &mut trace, &mut details)? {
            Ok(next) => pop = next,
            Err(outcome) => return Ok((outcome, details)),
        }
    }
    unreachable!("loop always returns on t == params.t")
}

/// Pure gradient ascent: `t` SGD steps applied independently to each of the
/// `g` initial samples. No refit, no resampling.
pub fn grad_plan(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
) -> Result<PlanOutcome> {
    grad_plan_detailed(env, s0, params, rng).map(|(outcome, _)| outcome)
}

/// [`grad_plan`] plus per-iteration internals.
pub fn grad_plan_detailed(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
) -> Result<(PlanOutcome, Vec<IterationDetail>)> {
    let init = GaussianPlanDistribution::standard(env.horizon, env.dim);
    grad_plan_from(env, s0, params, rng, init)
}

fn grad_plan_from(
    env: &EnvSpec,
    s0: &PointMassState,
    params: &PlannerParams,
    rng: &RngStream,
    init: GaussianPlanDistribution,
) -> Result<(PlanOutcome, Vec<IterationDetail>)> {
    params.validate()?;
    env.validate()?;
    let mut pop = sample_action_sequences(&init, params.g, &rng.child("init"))?;
    let mut trace = Vec::with_capacity(params.t);
    let mut details = Vec::with_capacity(params.t);
    let single_step = PlannerParams { j: 1, ..params.clone() };
    for t in 1..=params.t {
        refine_population(env, s0, &mut pop, &single_step)?;
        let returns = evaluate(env, s0, &pop)?;
        let order = sort_indices_by_return(&returns)?;
        trace.push(IterationStats {
            best_return: returns[order[0]],
            mean_return: mean(&returns),
        });
        details.push(IterationDetail {
            returns: returns.clone(),
            order: order.clone(),
            retained: Vec::new(),
            refit: None,
        });
        if t == params.t {
            let best = order[0];
            return Ok((
                PlanOutcome {
                    best_actions: pop[best].clone(),
                    best_return: returns[best],
                    trace,
                },
                details,
            ));
        }
    }
    unreachable!("loop always returns on t == params.t")
}

/// Planning entry points that seed the initial sampling distribution with a
/// caller-supplied mean (unit variance) instead of N(0, I). Used by the
/// warm-started control loop.
pub mod warm {
    use super::*;
    use ndarray::Array2;

    pub fn plan_from(
        kind: PlannerKind,
        env: &EnvSpec,
        s0: &PointMassState,
        params: &PlannerParams,
        rng: &RngStream,
        initial_mean: &ActionSequence,
    ) -> Result<PlanOutcome> {
        let ones = Array2::ones(initial_mean.actions.dim());
        let init = GaussianPlanDistribution::new(initial_mean.actions.clone(), ones)?;
        let out = match kind {
            PlannerKind::Cem => cem_plan_from(env, s0, params, rng, init)?,
            PlannerKind::Grad => grad_plan_from(env, s0, params, rng, init)?,
            PlannerKind::GradCem => gradcem_plan_from(env, s0, params, rng, init)?,
        };
        Ok(out.0)
    }
}
