//! Reproducible Monte Carlo estimation of initial-profile events and of the
//! consensus probability.
//!
//! Trial `k` of a request always sees the same initial configuration, drawn
//! from the stream [`trial_rng`]`(master_seed, k)`. Results are aggregated as
//! integer counts, so estimates are bit-identical for any worker count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_trajectory, Outcome, RunParams, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::opinion::Configuration;
use crate::profile::{component_count, is_delta_trivial, satisfies_star, satisfies_star_star};
use crate::rng::trial_rng;
use crate::scalar::{Scalar, ScalarMode};

/// Events whose probability can be estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Event {
    /// The trajectory reaches consensus.
    Consensus,
    /// The initial profile is connected.
    Connected0,
    /// The initial profile is `eps`-trivial.
    EpsTrivial0,
    /// The initial profile satisfies `(*)` (d = 1, n >= 4).
    Star0,
    /// The initial profile satisfies `(**)` (d = 1, n >= 4).
    StarStar0,
    /// `eps`-trivial or `(**)` (d = 1; `(**)` counts as false for n < 4).
    EpsTrivialOrStarStar0,
    /// Every agent starts within `eps / 2` of agent 1.
    HalfEpsBall0,
}

impl Event {
    pub const ALL: [Event; 7] = [
        Event::Consensus,
        Event::Connected0,
        Event::EpsTrivial0,
        Event::Star0,
        Event::StarStar0,
        Event::EpsTrivialOrStarStar0,
        Event::HalfEpsBall0,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Event::Consensus => "Consensus",
            Event::Connected0 => "Connected0",
            Event::EpsTrivial0 => "EpsTrivial0",
            Event::Star0 => "Star0",
            Event::StarStar0 => "StarStar0",
            Event::EpsTrivialOrStarStar0 => "EpsTrivialOrStarStar0",
            Event::HalfEpsBall0 => "HalfEpsBall0",
        }
    }

    /// Checks the predicate is defined for `(n, d)`.
    pub fn validate(self, n: usize, d: usize) -> Result<()> {
        if n == 0 || d == 0 {
            return Err(Error::Domain(format!("{self} needs n >= 1 and d >= 1")));
        }
        match self {
            Event::Star0 | Event::StarStar0 if d != 1 || n < 4 => Err(Error::Domain(format!(
                "{self} needs d = 1 and n >= 4, got n = {n}, d = {d}"
            ))),
            Event::EpsTrivialOrStarStar0 if d != 1 => {
                Err(Error::Domain(format!("{self} needs d = 1, got d = {d}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Event::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown event {s:?}")))
    }
}

/// Settings for trajectory-based events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub cap: Option<usize>,
    pub tol: f64,
    pub mode: ScalarMode,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            cap: None,
            tol: DEFAULT_TOL,
            mode: ScalarMode::Float64,
        }
    }
}

impl DynamicsParams {
    fn run_params(&self) -> RunParams {
        RunParams {
            cap: self.cap,
            tol: self.tol,
            record: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McRequest {
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub event: Event,
    pub dynamics: DynamicsParams,
}

impl McRequest {
    pub fn new(event: Event, n: usize, d: usize, eps: f64, trials: u64, master_seed: u64) -> Self {
        Self {
            n,
            d,
            eps,
            trials,
            master_seed,
            event,
            dynamics: DynamicsParams::default(),
        }
    }

    pub fn with_dynamics(mut self, dynamics: DynamicsParams) -> Self {
        self.dynamics = dynamics;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Domain(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if self.event == Event::Consensus {
            if self.dynamics.cap == Some(0) {
                return Err(Error::Validation("step cap must be at least 1".into()));
            }
            if self.dynamics.tol.is_nan() || self.dynamics.tol <= 0.0 {
                return Err(Error::Validation("tolerance must be positive".into()));
            }
        }
        self.event.validate(self.n, self.d)
    }
}

/// Frequency estimate with a normal-approximation 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub event: Event,
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    /// Trials that hit the step cap; never counted as successes.
    pub cap_reached: u64,
}

impl McEstimate {
    pub fn from_counts(req: &McRequest, successes: u64, cap_reached: u64) -> Self {
        let trials = req.trials;
        let p_hat = successes as f64 / trials as f64;
        let stderr = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
        let half = 1.96 * stderr;
        Self {
            event: req.event,
            n: req.n,
            d: req.d,
            eps: req.eps,
            trials,
            successes,
            p_hat,
            stderr,
            ci95: ((p_hat - half).max(0.0), (p_hat + half).min(1.0)),
            cap_reached,
        }
    }

    /// `true` if `value` lies within `k` standard errors of `p_hat`.
    pub fn within_sigmas(&self, value: f64, k: f64) -> bool {
        (self.p_hat - value).abs() <= k * self.stderr
    }

    pub fn cap_fraction(&self) -> f64 {
        self.cap_reached as f64 / self.trials as f64
    }
}

/// Source of i.i.d. initial opinions.
pub trait InitialLaw: Sync {
    /// Fills one agent's coordinates.
    fn fill(&self, rng: &mut ChaCha8Rng, opinion: &mut [f64]);
}

/// Uniform law on `[0, 1]^d`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformCube;

impl InitialLaw for UniformCube {
    fn fill(&self, rng: &mut ChaCha8Rng, opinion: &mut [f64]) {
        for c in opinion {
            *c = rng.random::<f64>();
        }
    }
}

/// Initial configuration of trial `trial_index`, uniform on the unit cube.
pub fn sample_initial(
    n: usize,
    d: usize,
    eps: f64,
    trial_index: u64,
    master_seed: u64,
) -> Result<Configuration<f64>> {
    sample_initial_with(&UniformCube, n, d, eps, trial_index, master_seed)
}

pub fn sample_initial_with(
    law: &dyn InitialLaw,
    n: usize,
    d: usize,
    eps: f64,
    trial_index: u64,
    master_seed: u64,
) -> Result<Configuration<f64>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("n and d must be at least 1".into()));
    }
    let mut rng = trial_rng(master_seed, trial_index);
    let mut coords = vec![0.0; n * d];
    for opinion in coords.chunks_exact_mut(d) {
        law.fill(&mut rng, opinion);
    }
    Configuration::from_flat(d, coords, eps)
}

/// Evaluates a time-zero event on `config`.
pub fn initial_event_holds<S: Scalar>(event: Event, config: &Configuration<S>) -> Result<bool> {
    event.validate(config.n(), config.dim())?;
    let eps = config.epsilon();
    match event {
        Event::Consensus => Err(Error::InvalidArgument(
            "Consensus is a trajectory event, not a time-zero predicate".into(),
        )),
        Event::Connected0 => Ok(component_count(config) == 1),
        Event::EpsTrivial0 => is_delta_trivial(config, eps),
        Event::Star0 => satisfies_star(config),
        Event::StarStar0 => Ok(satisfies_star_star(config)?.is_some()),
        Event::EpsTrivialOrStarStar0 => {
            if is_delta_trivial(config, eps)? {
                Ok(true)
            } else if config.n() >= 4 {
                Ok(satisfies_star_star(config)?.is_some())
            } else {
                Ok(false)
            }
        }
        Event::HalfEpsBall0 => {
            let half = eps.half();
            let radius_sq = half.clone() * half;
            Ok((1..config.n()).all(|j| config.distance_sq(0, j) <= radius_sq))
        }
    }
}

/// Per-trial result: whether the event held and whether the step cap was hit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub cap_reached: bool,
}

/// Evaluates the request's event on trial `trial_index` alone.
pub fn run_trial(req: &McRequest, trial_index: u64) -> Result<TrialOutcome> {
    let config = sample_initial(req.n, req.d, req.eps, trial_index, req.master_seed)?;
    if req.event != Event::Consensus {
        return Ok(TrialOutcome {
            success: initial_event_holds(req.event, &config)?,
            cap_reached: false,
        });
    }
    let params = req.dynamics.run_params();
    let outcome = match req.dynamics.mode {
        ScalarMode::Float64 => run_trajectory(&config, &params)?.outcome,
        ScalarMode::ExactRational => run_trajectory(&config.to_exact(), &params)?.outcome,
    };
    Ok(TrialOutcome {
        success: outcome == Outcome::Consensus,
        cap_reached: outcome == Outcome::CapReached,
    })
}

fn count_trials(req: &McRequest) -> Result<(u64, u64)> {
    (0..req.trials)
        .into_par_iter()
        .map(|k| run_trial(req, k).map(|o| (o.success as u64, o.cap_reached as u64)))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
}

/// Frequency of a time-zero event.
pub fn estimate_event(req: &McRequest) -> Result<McEstimate> {
    if req.event == Event::Consensus {
        return Err(Error::InvalidArgument(
            "use estimate_consensus for the Consensus event".into(),
        ));
    }
    req.validate()?;
    let (successes, _) = count_trials(req)?;
    Ok(McEstimate::from_counts(req, successes, 0))
}

/// Frequency of consensus over full trajectories.
pub fn estimate_consensus(req: &McRequest) -> Result<McEstimate> {
    if req.event != Event::Consensus {
        return Err(Error::InvalidArgument(format!(
            "estimate_consensus needs the Consensus event, got {}",
            req.event
        )));
    }
    req.validate()?;
    let (successes, cap_reached) = count_trials(req)?;
    Ok(McEstimate::from_counts(req, successes, cap_reached))
}

/// Dispatches to [`estimate_event`] or [`estimate_consensus`].
pub fn estimate(req: &McRequest) -> Result<McEstimate> {
    if req.event == Event::Consensus {
        estimate_consensus(req)
    } else {
        estimate_event(req)
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (`0` = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}
