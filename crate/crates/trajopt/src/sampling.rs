//! Population sampling and elite-refit primitives.
//!
//! Action sequences are drawn from a per-timestep diagonal Gaussian; after
//! evaluation the distribution is refit to the highest-return ("elite")
//! members by moment matching. These are the building blocks shared by all
//! planners.

use ndarray::Array2;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Elementwise lower bound on refit variances (action units squared).
/// Keeps sampling well-defined when all elites coincide.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// An open-loop plan: one row of forces per timestep, one column per action
/// dimension. Magnitudes are unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence {
    pub actions: Array2<f64>,
}

impl ActionSequence {
    pub fn new(actions: Array2<f64>) -> Result<Self> {
        if !actions.iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite("action sequence entries".into()));
        }
        Ok(ActionSequence { actions })
    }

    pub fn zeros(horizon: usize, dim: usize) -> Self {
        ActionSequence {
            actions: Array2::zeros((horizon, dim)),
        }
    }

    /// Planning horizon H (number of timesteps).
    pub fn horizon(&self) -> usize {
        self.actions.nrows()
    }

    /// Action dimension N.
    pub fn dim(&self) -> usize {
        self.actions.ncols()
    }
}

/// Per-timestep diagonal Gaussian over action sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPlanDistribution {
    mean: Array2<f64>,
    variance: Array2<f64>,
}

impl GaussianPlanDistribution {
    /// Build a distribution. Variances are clamped up to [`VARIANCE_FLOOR`]
    /// so the invariant holds by construction.
    pub fn new(mean: Array2<f64>, variance: Array2<f64>) -> Result<Self> {
        if mean.dim() != variance.dim() {
            return Err(Error::InvalidDistribution(format!(
                "mean shape {:?} != variance shape {:?}",
                mean.dim(),
                variance.dim()
            )));
        }
        if !mean.iter().all(|m| m.is_finite()) || !variance.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite distribution parameters".into()));
        }
        Ok(GaussianPlanDistribution {
            mean,
            variance: variance.mapv(|v| v.max(VARIANCE_FLOOR)),
        })
    }

    /// The standard normal plan distribution N(0, I) over H x N sequences.
    pub fn standard(horizon: usize, dim: usize) -> Self {
        GaussianPlanDistribution {
            mean: Array2::zeros((horizon, dim)),
            variance: Array2::ones((horizon, dim)),
        }
    }

    pub fn mean(&self) -> &Array2<f64> {
        &self.mean
    }

    pub fn variance(&self) -> &Array2<f64> {
        &self.variance
    }

    pub fn horizon(&self) -> usize {
        self.mean.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.ncols()
    }
}

/// Algorithm knobs for every planner.
///
/// `t` is the number of outer iterations, `g` the population size, `k` the
/// elite count, `j` the inner gradient steps per iteration and `beta` the
/// gradient-ascent step size. The two flags cover the documented ablations:
/// `retain_elites = false` gives the classic CEM that resamples the whole
/// population, and `grad_clip` caps each sequence's gradient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub t: usize,
    pub g: usize,
    pub k: usize,
    pub j: usize,
    pub beta: f64,
    pub seed: u64,
    pub retain_elites: bool,
    pub grad_clip: Option<f64>,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            t: 10,
            g: 20,
            k: 4,
            j: 1,
            beta: 0.1,
            seed: 0,
            retain_elites: true,
            grad_clip: None,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if self.t < 1 {
            return Err(Error::Parameter("t must be >= 1".into()));
        }
        if self.k < 1 || self.k > self.g {
            return Err(Error::Parameter(format!(
                "elite count k={} must satisfy 1 <= k <= g={}",
                self.k, self.g
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Parameter(format!("beta={} must be > 0", self.beta)));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Parameter(format!("grad_clip={c} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Draw `count` independent action sequences from `dist`.
///
/// Sample `i` is drawn entirely from the substream `rng.index(i)`, so the
/// result does not depend on evaluation order or parallel schedule.
pub fn sample_action_sequences(
    dist: &GaussianPlanDistribution,
    count: usize,
    rng: &RngStream,
) -> Result<Vec<ActionSequence>> {
    if count < 1 {
        return Err(Error::Parameter("sample count must be >= 1".into()));
    }
    if dist.mean.dim() != dist.variance.dim() {
        return Err(Error::InvalidDistribution("mean/variance shape mismatch".into()));
    }
    let (h, n) = dist.mean.dim();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut r = rng.index(i as u64).rng();
        let mut actions = Array2::zeros((h, n));
        for row in 0..h {
            for col in 0..n {
                let normal = Normal::new(dist.mean[[row, col]], dist.variance[[row, col]].sqrt())
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                actions[[row, col]] = normal.sample(&mut r);
            }
        }
        out.push(ActionSequence { actions });
    }
    Ok(out)
}

/// Indices of `returns` ordered by descending value; stable on ties.
pub fn sort_indices_by_return(returns: &[f64]) -> Result<Vec<usize>> {
    for (i, r) in returns.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::InvalidReturn(i));
        }
    }
    let mut idx: Vec<usize> = (0..returns.len()).collect();
    // Vec::sort_by is stable, so equal returns keep their original order.
    idx.sort_by(|&a, &b| returns[b].partial_cmp(&returns[a]).unwrap());
    Ok(idx)
}

/// Refit the sampling distribution to the `k` highest-return sequences.
///
/// The mean is the elementwise average of the elites and the variance the
/// elementwise population variance (divide by `k`), floored at
/// [`VARIANCE_FLOOR`]. Ties are broken by lower index.
pub fn fit_elites(
    sequences: &[ActionSequence],
    returns: &[f64],
    k: usize,
) -> Result<GaussianPlanDistribution> {
    if sequences.is_empty() {
        return Err(Error::Parameter("cannot fit elites of an empty population".into()));
    }
    if sequences.len() != returns.len() {
        return Err(Error::Parameter(format!(
            "{} sequences but {} returns",
            sequences.len(),
            returns.len()
        )));
    }
    if k < 1 || k > sequences.len() {
        return Err(Error::Parameter(format!(
            "elite count {} out of range for population {}",
            k,
            sequences.len()
        )));
    }
    let shape = sequences[0].actions.dim();
    if sequences.iter().any(|s| s.actions.dim() != shape) {
        return Err(Error::Parameter("sequences have mismatched shapes".into()));
    }

    let order = sort_indices_by_return(returns)?;
    let elites = &order[..k];

    let mut mean = Array2::<f64>::zeros(shape);
    for &i in elites {
        mean += &sequences[i].actions;
    }
    mean /= k as f64;

    let mut variance = Array2::<f64>::zeros(shape);
    for &i in elites {
        let d = &sequences[i].actions - &mean;
        variance += &(&d * &d);
    }
    variance /= k as f64;

    GaussianPlanDistribution::new(mean, variance)
}
