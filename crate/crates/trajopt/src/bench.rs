//! Experiment harness: seeded planner sweeps, summary statistics, paired
//! significance tests, trajectory dumps and the gradient agreement check.
//!
//! Sweep cells (value, planner, seed) are independent and run in parallel;
//! records always come back in canonical order (value, then planner, then
//! seed) so output files do not depend on the thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;

use crate::env::scenarios::{self, EnvDefaults};
use crate::env::{
    finite_diff_grad, max_relative_error, rollout, rollout_with_grad, EnvSpec, Obstacle,
    PointMassState, FD_STEP,
};
use crate::error::{Error, Result};
use crate::mpc::{run_episode, EpisodeOptions};
use crate::planners::PlannerKind;
use crate::rng::RngStream;
use crate::sampling::{ActionSequence, PlannerParams};
use crate::stats::{paired_t_test, SummaryStats, TTestResult};

/// Which experiment family a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Single soft obstacle, sweep over the environment dimension.
    DimSweep,
    /// 2D hard contact, sweep over the obstacle count.
    ObstacleSweep,
    /// Sweep over the dimension with the template's own geometry.
    Custom,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::DimSweep => "dim_sweep",
            Scenario::ObstacleSweep => "obstacle_sweep",
            Scenario::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dim_sweep" | "dim" => Ok(Scenario::DimSweep),
            "obstacle_sweep" | "obstacles" => Ok(Scenario::ObstacleSweep),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Environment knobs a sweep starts from before applying per-value geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvTemplate {
    pub dim: usize,
    pub defaults: EnvDefaults,
    /// Soft-contact spring constant; hard-contact scenarios multiply by 10.
    pub spring_k: f64,
    /// Obstacle count for single runs and the custom scenario (0 = free).
    pub obstacle_count: usize,
}

impl Default for EnvTemplate {
    fn default() -> Self {
        EnvTemplate {
            dim: 2,
            defaults: EnvDefaults::default(),
            spring_k: scenarios::SOFT_SPRING_K,
            obstacle_count: 1,
        }
    }
}

impl EnvTemplate {
    /// The environment for one standalone run (CLI `plan`, `episode`,
    /// `dump-traj`): the template's own dimension and obstacle count.
    pub fn build(&self) -> Result<EnvSpec> {
        match self.obstacle_count {
            0 => scenarios::free_env(self.dim, self.defaults),
            n => scenarios::obstacle_corridor_env(self.dim, n, self.spring_k, self.defaults),
        }
    }
}

/// Full description of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario: Scenario,
    /// Dimensions (dim sweep, custom) or obstacle counts (obstacle sweep).
    pub sweep_values: Vec<usize>,
    pub planners: Vec<PlannerKind>,
    pub seeds: Vec<u64>,
    pub params: PlannerParams,
    pub template: EnvTemplate,
    /// Score full closed-loop episodes instead of a single planning call.
    pub episode_mode: bool,
    pub episode: EpisodeOptions,
    /// Record wall times. Off by default so repeated runs are bit-identical.
    pub measure_time: bool,
}

impl SweepSpec {
    /// Sweep with the defaults for `scenario`: 50 consecutive seeds from
    /// `base_seed`, all three planners, single-plan scoring.
    pub fn with_defaults(scenario: Scenario, base_seed: u64) -> Self {
        let sweep_values = match scenario {
            Scenario::DimSweep | Scenario::Custom => vec![2, 5, 10, 15, 20],
            Scenario::ObstacleSweep => vec![1, 2, 3, 4, 5],
        };
        SweepSpec {
            scenario,
            sweep_values,
            planners: PlannerKind::ALL.to_vec(),
            seeds: consecutive_seeds(base_seed, 50),
            params: PlannerParams::default(),
            template: EnvTemplate::default(),
            episode_mode: false,
            episode: EpisodeOptions::default(),
            measure_time: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sweep_values.is_empty() {
            return Err(Error::Config("sweep_values must be nonempty".into()));
        }
        if self.planners.is_empty() {
            return Err(Error::Config("planners must be nonempty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.scenario == Scenario::ObstacleSweep && self.sweep_values.iter().any(|&v| v == 0) {
            return Err(Error::Config("obstacle counts must be >= 1".into()));
        }
        if self.sweep_values.iter().any(|&v| v == 0) {
            return Err(Error::Config("sweep values must be >= 1".into()));
        }
        self.params.validate()
    }

    /// The concrete environment for one sweep value.
    pub fn env_for(&self, value: usize) -> Result<EnvSpec> {
        match self.scenario {
            Scenario::DimSweep => {
                scenarios::single_obstacle_env(value, self.template.spring_k, self.template.defaults)
            }
            Scenario::ObstacleSweep => scenarios::obstacle_corridor_env(
                2,
                value,
                10.0 * self.template.spring_k,
                self.template.defaults,
            ),
            Scenario::Custom => match self.template.obstacle_count {
                0 => scenarios::free_env(value, self.template.defaults),
                n => scenarios::obstacle_corridor_env(
                    value,
                    n,
                    self.template.spring_k,
                    self.template.defaults,
                ),
            },
        }
    }
}

/// `count` consecutive seeds starting at `base`.
pub fn consecutive_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

/// One sweep cell's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub value: usize,
    pub planner: PlannerKind,
    pub seed: u64,
    pub total_reward: f64,
    /// Zero unless the sweep was asked to measure time.
    pub wall_time_s: f64,
}

fn run_cell(spec: &SweepSpec, value: usize, planner: PlannerKind, seed: u64) -> Result<RunRecord> {
    let env = spec.env_for(value)?;
    let s0 = PointMassState::at_rest(env.dim);
    let params = PlannerParams { seed, ..spec.params.clone() };
    let rng = RngStream::new(seed);
    let started = Instant::now();
    let total_reward = if spec.episode_mode {
        run_episode(&env, planner, &params, &s0, &spec.episode, &rng)?.realized_return
    } else {
        planner.plan(&env, &s0, &params, &rng)?.best_return
    };
    let wall_time_s = if spec.measure_time { started.elapsed().as_secs_f64() } else { 0.0 };
    Ok(RunRecord { scenario: spec.scenario, value, planner, seed, total_reward, wall_time_s })
}

/// Run every (value, planner, seed) cell of the sweep. Cells execute in
/// parallel; the record order is canonical regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let mut values = spec.sweep_values.clone();
    values.sort_unstable();
    values.dedup();
    let mut planners = spec.planners.clone();
    planners.sort_unstable();
    planners.dedup();

    let mut cells = Vec::new();
    for &value in &values {
        for &planner in &planners {
            for &seed in &spec.seeds {
                cells.push((value, planner, seed));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(value, planner, seed)| run_cell(spec, value, planner, seed))
        .collect()
}

/// Dimensionality sweep (single soft obstacle).
pub fn run_dim_sweep(spec: &SweepSpec) -> Result<Vec<RunRecord>> {
    if spec.scenario != Scenario::DimSweep {
        return Err(Error::Config("run_dim_sweep requires the dim_sweep scenario".into()));
    }
    run_sweep(spec)
}

/// Obstacle-count sweep (2D, hard contact).
pub fn run_obstacle_sweep(spec: &SweepSpec) -> Result<Vec<RunRecord>> {
    if spec.scenario != Scenario::ObstacleSweep {
        return Err(Error::Config(
            "run_obstacle_sweep requires the obstacle_sweep scenario".into(),
        ));
    }
    run_sweep(spec)
}

/// Group records by (value, planner) and summarize total rewards. Values
/// are accumulated in a canonical order, so the result is exactly invariant
/// under record reordering.
pub fn summarize(records: &[RunRecord]) -> BTreeMap<(usize, PlannerKind), SummaryStats> {
    let mut groups: BTreeMap<(usize, PlannerKind), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.value, r.planner)).or_default().push(r.total_reward);
    }
    groups
        .into_iter()
        .map(|(key, mut vals)| {
            vals.sort_by(f64::total_cmp);
            (key, SummaryStats::of(&vals).expect("group is nonempty"))
        })
        .collect()
}

/// Per-seed rewards of one (value, planner) group, sorted by seed.
pub fn rewards_by_seed(records: &[RunRecord], value: usize, planner: PlannerKind) -> Vec<f64> {
    let mut rows: Vec<(u64, f64)> = records
        .iter()
        .filter(|r| r.value == value && r.planner == planner)
        .map(|r| (r.seed, r.total_reward))
        .collect();
    rows.sort_by_key(|&(seed, _)| seed);
    rows.into_iter().map(|(_, reward)| reward).collect()
}

/// Paired t-tests of planner `a` against planner `b` for every sweep value
/// present in the records, pairing runs by seed.
pub fn compare_planners(
    records: &[RunRecord],
    a: PlannerKind,
    b: PlannerKind,
) -> Result<Vec<(usize, TTestResult)>> {
    let mut values: Vec<usize> = records.iter().map(|r| r.value).collect();
    values.sort_unstable();
    values.dedup();
    let mut out = Vec::with_capacity(values.len());
    for value in values {
        let xs = rewards_by_seed(records, value, a);
        let ys = rewards_by_seed(records, value, b);
        if xs.len() != ys.len() {
            return Err(Error::Config(format!(
                "value {value}: planner {a} has {} runs but {b} has {}",
                xs.len(),
                ys.len()
            )));
        }
        out.push((value, paired_t_test(&xs, &ys)?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV emission. Formats are part of the external contract; floats use Rust's
// shortest round-trip representation so identical runs serialize identically.

pub const RECORDS_CSV_HEADER: &str = "scenario,value,planner,seed,total_reward,wall_time_s";
pub const SUMMARY_CSV_HEADER: &str = "value,planner,mean,std,count";
pub const TTEST_CSV_HEADER: &str = "value,planner_a,planner_b,t,dof,p";

pub fn write_records_csv<W: Write>(mut w: W, records: &[RunRecord]) -> Result<()> {
    writeln!(w, "{RECORDS_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.scenario.name(),
            r.value,
            r.planner,
            r.seed,
            r.total_reward,
            r.wall_time_s
        )?;
    }
    Ok(())
}

/// Parse a records CSV produced by [`write_records_csv`].
pub fn read_records_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == RECORDS_CSV_HEADER => {}
        _ => return Err(Error::Config(format!("records CSV must start with '{RECORDS_CSV_HEADER}'"))),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Config(format!("records CSV line {}: expected 6 fields", i + 2)));
        }
        let bad = |what: &str| Error::Config(format!("records CSV line {}: bad {what}", i + 2));
        records.push(RunRecord {
            scenario: fields[0].parse()?,
            value: fields[1].parse().map_err(|_| bad("value"))?,
            planner: fields[2].parse()?,
            seed: fields[3].parse().map_err(|_| bad("seed"))?,
            total_reward: fields[4].parse().map_err(|_| bad("total_reward"))?,
            wall_time_s: fields[5].parse().map_err(|_| bad("wall_time_s"))?,
        });
    }
    Ok(records)
}

pub fn write_summary_csv<W: Write>(
    mut w: W,
    summary: &BTreeMap<(usize, PlannerKind), SummaryStats>,
) -> Result<()> {
    writeln!(w, "{SUMMARY_CSV_HEADER}")?;
    for (&(value, planner), s) in summary {
        writeln!(w, "{},{},{},{},{}", value, planner, s.mean, s.std, s.count)?;
    }
    Ok(())
}

pub fn write_ttest_csv<W: Write>(
    mut w: W,
    a: PlannerKind,
    b: PlannerKind,
    rows: &[(usize, TTestResult)],
) -> Result<()> {
    writeln!(w, "{TTEST_CSV_HEADER}")?;
    for (value, t) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            value, a, b, t.t_statistic, t.degrees_of_freedom, t.p_value
        )?;
    }
    Ok(())
}

/// Run each planner once, roll its best plan out, and write the visited
/// positions as CSV (`planner,step,x0,..` with step 0 the start position;
/// H+1 rows per planner).
pub fn dump_trajectories<W: Write>(
    mut w: W,
    env: &EnvSpec,
    planners: &[PlannerKind],
    params: &PlannerParams,
    seed: u64,
) -> Result<()> {
    env.validate()?;
    let s0 = PointMassState::at_rest(env.dim);
    let header: Vec<String> = (0..env.dim).map(|i| format!("x{i}")).collect();
    writeln!(w, "planner,step,{}", header.join(","))?;
    for &planner in planners {
        let rng = RngStream::new(seed);
        let outcome = planner.plan(env, &s0, params, &rng)?;
        let result = rollout(env, &s0, &outcome.best_actions)?;
        write_position_row(&mut w, planner, 0, &s0.position)?;
        for (i, state) in result.states.iter().enumerate() {
            write_position_row(&mut w, planner, i + 1, &state.position)?;
        }
    }
    Ok(())
}

fn write_position_row<W: Write>(
    w: &mut W,
    planner: PlannerKind,
    step: usize,
    position: &Array1<f64>,
) -> Result<()> {
    let cols: Vec<String> = position.iter().map(|x| x.to_string()).collect();
    writeln!(w, "{},{},{}", planner, step, cols.join(","))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Gradient agreement experiment.

/// Outcome of the oracle agreement experiment over random configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub configs: usize,
    pub max_rel_error: f64,
}

/// Compare the reverse-accumulated gradient against central differences on
/// `configs` random environments whose trajectories stay clear of every
/// contact boundary (rejection-sampled margin of 10x the difference step).
pub fn grad_check(configs: usize, seed: u64) -> Result<GradCheckReport> {
    let accepted = accept_grad_check_configs(configs, seed)?;
    let errors: Vec<f64> = accepted
        .par_iter()
        .map(|(env, s0, actions)| -> Result<f64> {
            let (_, adjoint) = rollout_with_grad(env, s0, actions)?;
            let fd = finite_diff_grad(env, s0, actions, FD_STEP)?;
            Ok(max_relative_error(&adjoint, &fd))
        })
        .collect::<Result<_>>()?;
    let max_rel_error = errors.into_iter().fold(0.0f64, f64::max);
    Ok(GradCheckReport { configs, max_rel_error })
}

fn accept_grad_check_configs(
    configs: usize,
    seed: u64,
) -> Result<Vec<(EnvSpec, PointMassState, ActionSequence)>> {
    let root = RngStream::new(seed).child("gradcheck");
    let mut accepted = Vec::with_capacity(configs);
    let mut attempt = 0u64;
    while accepted.len() < configs {
        if attempt > 50 * configs as u64 {
            return Err(Error::Config(
                "could not find enough boundary-clear configurations".into(),
            ));
        }
        let candidate = random_config(&root.index(attempt));
        attempt += 1;
        if trajectory_clear_of_boundaries(&candidate.0, &candidate.1, &candidate.2)? {
            accepted.push(candidate);
        }
    }
    Ok(accepted)
}

fn random_config(rng: &RngStream) -> (EnvSpec, PointMassState, ActionSequence) {
    let mut r = rng.rng();
    let dim = r.random_range(1..=3usize);
    let horizon = r.random_range(4..=12usize);
    let dt = r.random_range(0.02..0.15);
    let mass = r.random_range(0.5..2.0);
    let reward_scale = r.random_range(0.3..2.0);
    let goal = Array1::from_iter((0..dim).map(|_| r.random_range(-1.5..1.5)));
    let n_obstacles = r.random_range(0..=2usize);
    let obstacles = (0..n_obstacles)
        .map(|_| {
            let center = Array1::from_iter((0..dim).map(|_| r.random_range(-1.0..1.0)));
            Obstacle { center, radius: r.random_range(0.2..0.8) }
        })
        .collect();
    let spring_k = r.random_range(5.0..50.0);
    let env = EnvSpec { dim, horizon, dt, mass, goal, obstacles, spring_k, reward_scale };

    let position = Array1::from_iter((0..dim).map(|_| r.random_range(-0.5..0.5)));
    let velocity = Array1::from_iter((0..dim).map(|_| r.random_range(-0.5..0.5)));
    let s0 = PointMassState { position, velocity };

    let actions = Array2::from_shape_fn((horizon, dim), |_| r.random_range(-1.5..1.5));
    (env, s0, ActionSequence { actions })
}

/// Every visited point must be at least 10 finite-difference steps away from
/// every obstacle boundary, where the contact force is non-smooth.
fn trajectory_clear_of_boundaries(
    env: &EnvSpec,
    s0: &PointMassState,
    actions: &ActionSequence,
) -> Result<bool> {
    let margin = 10.0 * FD_STEP;
    let result = rollout(env, s0, actions)?;
    for state in std::iter::once(s0).chain(result.states.iter()) {
        for o in &env.obstacles {
            let u = &state.position - &o.center;
            let dist = u.dot(&u).sqrt();
            if (dist - o.radius).abs() < margin {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
