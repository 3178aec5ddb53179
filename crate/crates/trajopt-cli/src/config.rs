//! Flat key/value run configuration.
//!
//! A config file is UTF-8 text with one `key = value` per line and `#`
//! comments. Every knob has a default; file values override defaults and
//! command-line `--set key=value` pairs override the file. The `TRAJOPT_SEED`
//! environment variable acts as a seed fallback below both. Unknown keys are
//! rejected.

use std::path::Path;

use trajopt::bench::{EnvTemplate, Scenario, SweepSpec};
use trajopt::error::{Error, Result};
use trajopt::mpc::EpisodeOptions;
use trajopt::planners::PlannerKind;
use trajopt::sampling::PlannerParams;

/// Gradient clip norm applied when `planner.grad_clip = true`.
pub const GRAD_CLIP_NORM: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads (0 = one per core).
    pub threads: usize,
    /// Planner for single-run subcommands.
    pub planner: PlannerKind,
    pub params: PlannerParams,
    pub template: EnvTemplate,
    pub episode: EpisodeOptions,
    /// Sweep values; empty means the scenario's defaults.
    pub sweep_values: Vec<usize>,
    pub sweep_seed_count: usize,
    pub sweep_planners: Vec<PlannerKind>,
    pub sweep_episode_mode: bool,
    pub sweep_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            threads: 0,
            planner: PlannerKind::GradCem,
            params: PlannerParams::default(),
            template: EnvTemplate::default(),
            episode: EpisodeOptions::default(),
            sweep_values: Vec::new(),
            sweep_seed_count: 50,
            sweep_planners: PlannerKind::ALL.to_vec(),
            sweep_episode_mode: false,
            sweep_timing: false,
        }
    }
}

impl RunConfig {
    /// Resolve a config from its layered sources.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Ok(seed) = std::env::var("TRAJOPT_SEED") {
            cfg.set("seed", seed.trim())
                .map_err(|e| Error::Config(format!("TRAJOPT_SEED: {e}")))?;
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        for (key, value) in overrides {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Assign one key. Values are parsed per key; unknown keys error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("key '{key}': invalid {what} '{value}'"));
        match key {
            "seed" => self.seed = value.parse().map_err(|_| bad("u64"))?,
            "threads" => self.threads = value.parse().map_err(|_| bad("count"))?,
            "planner" => self.planner = value.parse()?,
            "planner.t" => self.params.t = value.parse().map_err(|_| bad("count"))?,
            "planner.g" => self.params.g = value.parse().map_err(|_| bad("count"))?,
            "planner.k" => self.params.k = value.parse().map_err(|_| bad("count"))?,
            "planner.j" => self.params.j = value.parse().map_err(|_| bad("count"))?,
            "planner.beta" => self.params.beta = value.parse().map_err(|_| bad("number"))?,
            "planner.grad_clip" => {
                let on: bool = value.parse().map_err(|_| bad("bool"))?;
                self.params.grad_clip = on.then_some(GRAD_CLIP_NORM);
            }
            "planner.retain_elites" => {
                self.params.retain_elites = value.parse().map_err(|_| bad("bool"))?
            }
            "env.dim" => self.template.dim = value.parse().map_err(|_| bad("count"))?,
            "env.horizon" => {
                self.template.defaults.horizon = value.parse().map_err(|_| bad("count"))?
            }
            "env.dt" => self.template.defaults.dt = value.parse().map_err(|_| bad("number"))?,
            "env.mass" => self.template.defaults.mass = value.parse().map_err(|_| bad("number"))?,
            "env.reward_scale" => {
                self.template.defaults.reward_scale = value.parse().map_err(|_| bad("number"))?
            }
            "env.spring_k" => self.template.spring_k = value.parse().map_err(|_| bad("number"))?,
            "env.obstacles" => {
                self.template.obstacle_count = value.parse().map_err(|_| bad("count"))?
            }
            "episode.length" => self.episode.length = value.parse().map_err(|_| bad("count"))?,
            "episode.warm_start" => {
                self.episode.warm_start = value.parse().map_err(|_| bad("bool"))?
            }
            "sweep.values" => {
                self.sweep_values = value
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad("value list")))
                    .collect::<Result<_>>()?
            }
            "sweep.seeds" => self.sweep_seed_count = value.parse().map_err(|_| bad("count"))?,
            "sweep.planners" => {
                self.sweep_planners = value
                    .split(',')
                    .map(|v| v.trim().parse())
                    .collect::<Result<_>>()?
            }
            "sweep.episode_mode" => {
                self.sweep_episode_mode = value.parse().map_err(|_| bad("bool"))?
            }
            "sweep.timing" => self.sweep_timing = value.parse().map_err(|_| bad("bool"))?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.template.build().map_err(|e| Error::Config(e.to_string()))?;
        if self.episode.length < 1 {
            return Err(Error::Config("episode.length must be >= 1".into()));
        }
        if self.sweep_seed_count < 1 {
            return Err(Error::Config("sweep.seeds must be >= 1".into()));
        }
        if self.sweep_planners.is_empty() {
            return Err(Error::Config("sweep.planners must be nonempty".into()));
        }
        Ok(())
    }

    /// Sweep specification for a scenario, with seeds `seed..seed+n`.
    pub fn sweep_spec(&self, scenario: Scenario) -> SweepSpec {
        let mut spec = SweepSpec::with_defaults(scenario, self.seed);
        if !self.sweep_values.is_empty() {
            spec.sweep_values = self.sweep_values.clone();
        }
        spec.planners = self.sweep_planners.clone();
        spec.seeds = trajopt::bench::consecutive_seeds(self.seed, self.sweep_seed_count);
        spec.params = PlannerParams { seed: self.seed, ..self.params.clone() };
        spec.template = self.template;
        spec.episode_mode = self.sweep_episode_mode;
        spec.episode = self.episode;
        spec.measure_time = self.sweep_timing;
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(
            (cfg.params.t, cfg.params.g, cfg.params.k, cfg.params.j),
            (10, 20, 4, 1)
        );
        assert_eq!(cfg.sweep_seed_count, 50);
    }

    #[test]
    fn file_parsing_and_comments() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("# comment\nplanner.t = 5\nenv.dt=0.1  # inline\n\nsweep.values = 2, 4\n")
            .unwrap();
        assert_eq!(cfg.params.t, 5);
        assert_eq!(cfg.template.defaults.dt, 0.1);
        assert_eq!(cfg.sweep_values, vec![2, 4]);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("planner.t = 5").unwrap();
        cfg.set("planner.t", "7").unwrap();
        assert_eq!(cfg.params.t, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("planner.gamma", "1").is_err());
        assert!(cfg.apply_file("no_such_key = 3").is_err());
    }

    #[test]
    fn invariants_enforced_at_validate() {
        let mut cfg = RunConfig::default();
        cfg.set("planner.k", "30").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn grad_clip_flag_maps_to_norm() {
        let mut cfg = RunConfig::default();
        cfg.set("planner.grad_clip", "true").unwrap();
        assert_eq!(cfg.params.grad_clip, Some(GRAD_CLIP_NORM));
        cfg.set("planner.grad_clip", "false").unwrap();
        assert_eq!(cfg.params.grad_clip, None);
    }
}
