//! Receding-horizon control: plan, execute the first action, observe, repeat.

use ndarray::Array1;

use crate::env::{reward, step, EnvSpec, PointMassState};
use crate::error::{Error, Result};
use crate::planners::PlannerKind;
use crate::rng::RngStream;
use crate::sampling::{ActionSequence, PlannerParams};

/// Everything recorded over one closed-loop episode of `L` environment steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// The first action of each step's plan, as executed (length L).
    pub executed_actions: Vec<Array1<f64>>,
    /// `s_0..s_L` inclusive.
    pub visited_states: Vec<PointMassState>,
    /// Sum of environment rewards over `s_1..s_L`.
    pub realized_return: f64,
    /// The planner's best model return at each step (length L).
    pub per_step_plan_returns: Vec<f64>,
}

/// Options for [`run_episode`] beyond the planner parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    /// Number of environment steps L.
    pub length: usize,
    /// Seed the next step's sampling distribution mean with the unexecuted
    /// tail of the previous plan instead of starting from N(0, I).
    pub warm_start: bool,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        EpisodeOptions { length: 50, warm_start: false }
    }
}

/// Run a closed-loop episode: at every step the planner is invoked from the
/// current state (keyed by the step index), only the first planned action is
/// executed, and the rest of the plan is discarded unless warm starting is
/// enabled.
pub fn run_episode(
    env: &EnvSpec,
    planner: PlannerKind,
    params: &PlannerParams,
    s0: &PointMassState,
    opts: &EpisodeOptions,
    rng: &RngStream,
) -> Result<EpisodeResult> {
    if opts.length < 1 {
        return Err(Error::Parameter("episode length must be >= 1".into()));
    }
    params.validate()?;
    env.validate()?;

    let mut state = s0.clone();
    let mut visited_states = vec![state.clone()];
    let mut executed_actions = Vec::with_capacity(opts.length);
    let mut per_step_plan_returns = Vec::with_capacity(opts.length);
    let mut realized_return = 0.0;
    let mut previous_plan: Option<ActionSequence> = None;

    for l in 0..opts.length {
        let step_rng = rng.child("step").index(l as u64);
        let outcome = match (opts.warm_start, &previous_plan) {
            (true, Some(prev)) => {
                let warmed = shift_plan(prev);
                crate::planners::warm::plan_from(planner, env, &state, params, &step_rng, &warmed)?
            }
            _ => planner.plan(env, &state, params, &step_rng)?,
        };
        let action = outcome.best_actions.actions.row(0).to_owned();
        state = step(&state, &action, env);
        realized_return += reward(&state, env);
        executed_actions.push(action);
        visited_states.push(state.clone());
        per_step_plan_returns.push(outcome.best_return);
        previous_plan = Some(outcome.best_actions);
    }

    Ok(EpisodeResult {
        executed_actions,
        visited_states,
        realized_return,
        per_step_plan_returns,
    })
}

/// Drop the executed first action and append a zero row.
fn shift_plan(plan: &ActionSequence) -> ActionSequence {
    let (h, n) = plan.actions.dim();
    let mut shifted = ndarray::Array2::zeros((h, n));
    for row in 1..h {
        shifted.row_mut(row - 1).assign(&plan.actions.row(row));
    }
    ActionSequence { actions: shifted }
}
