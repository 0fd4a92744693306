//! Iterating the update map to its finite-time limit.

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::opinion::{diameter_sq, update_step, Configuration};
use crate::profile::{build_profile, component_count, is_connected};
use crate::scalar::{ratio, Scalar, ScalarMode};

/// Default fixed-point tolerance for float trajectories, relative to `max(1, epsilon)`.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Upper bound on retained states when history recording is on.
pub const MAX_HISTORY: usize = 10_000;

/// `max(1000, n^3)`.
pub fn default_cap(n: usize) -> usize {
    n.saturating_pow(3).max(1000)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Consensus,
    Fragmented,
    CapReached,
}

/// Stopping parameters for [`run_trajectory`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunParams {
    /// Step cap; `None` means [`default_cap`] for the configuration's `n`.
    pub cap: Option<usize>,
    /// Float fixed-point tolerance; ignored in exact mode.
    pub tol: f64,
    pub record: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            cap: None,
            tol: DEFAULT_TOL,
            record: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult<S> {
    pub outcome: Outcome,
    /// Time at which the stopping rule fired.
    pub steps: usize,
    pub final_state: Configuration<S>,
    /// Components of the final profile.
    pub cluster_count: usize,
    /// `x(0), x(1), ...` up to [`MAX_HISTORY`] states; empty unless recording.
    pub history: Vec<Configuration<S>>,
}

impl<S> TrajectoryResult<S> {
    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn is_consensus(&self) -> bool {
        self.outcome == Outcome::Consensus
    }
}

fn max_displacement<S: Scalar>(a: &Configuration<S>, b: &Configuration<S>) -> f64 {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| (x.clone() - y.clone()).abs().to_f64())
        .fold(0.0, f64::max)
}

fn is_fixed_point<S: Scalar>(
    current: &Configuration<S>,
    next: &Configuration<S>,
    tol: f64,
) -> bool {
    match S::MODE {
        ScalarMode::ExactRational => current.coords() == next.coords(),
        ScalarMode::Float64 => {
            let scale = current.epsilon().to_f64().max(1.0);
            max_displacement(current, next) <= tol * scale
        }
    }
}

/// Iterates the synchronous update until a fixed point, a one-dimensional
/// disconnection, or the step cap.
///
/// On the line a disconnected profile never reconnects, so the run stops as
/// `Fragmented` at the first disconnected state. In higher dimensions the run
/// always continues to a fixed point. A fixed point is a consensus when its
/// profile has one component and its diameter is at most `tol * epsilon`
/// (zero in exact mode).
pub fn run_trajectory<S: Scalar>(
    config: &Configuration<S>,
    params: &RunParams,
) -> Result<TrajectoryResult<S>> {
    let cap = params.cap.unwrap_or_else(|| default_cap(config.n()));
    if cap == 0 {
        return Err(Error::InvalidArgument("step cap must be at least 1".into()));
    }
    if S::MODE == ScalarMode::Float64 && (params.tol.is_nan() || params.tol <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            params.tol
        )));
    }

    let mut history = Vec::new();
    let mut current = config.clone();
    for t in 0..=cap {
        if params.record && history.len() < MAX_HISTORY {
            history.push(current.clone());
        }
        if current.dim() == 1 {
            let clusters = component_count(&current);
            if clusters > 1 {
                return Ok(TrajectoryResult {
                    outcome: Outcome::Fragmented,
                    steps: t,
                    final_state: current,
                    cluster_count: clusters,
                    history,
                });
            }
        }
        if t == cap {
            break;
        }
        let next = update_step(&current);
        if is_fixed_point(&current, &next, params.tol) {
            let cluster_count = build_profile(&next).component_count();
            let outcome = if cluster_count == 1 && collapsed(&next, params.tol) {
                Outcome::Consensus
            } else {
                Outcome::Fragmented
            };
            return Ok(TrajectoryResult {
                outcome,
                steps: t,
                final_state: next,
                cluster_count,
                history,
            });
        }
        current = next;
    }
    let cluster_count = build_profile(&current).component_count();
    Ok(TrajectoryResult {
        outcome: Outcome::CapReached,
        steps: cap,
        final_state: current,
        cluster_count,
        history,
    })
}

fn collapsed<S: Scalar>(config: &Configuration<S>, tol: f64) -> bool {
    let diam_sq = diameter_sq(config);
    match S::MODE {
        ScalarMode::ExactRational => diam_sq == S::zero(),
        ScalarMode::Float64 => {
            let bound = tol * config.epsilon().to_f64();
            diam_sq.to_f64() <= bound * bound
        }
    }
}

/// A one-dimensional configuration whose profile is connected at `t = 0` but
/// disconnected at `t = 1`.
///
/// For `n = 5` this is `epsilon = 1`, `x = (-1, 0, 1, 2, 2)`; larger `n`
/// appends agents alternately at `-1` and `2`. The connectivity break is
/// checked before returning.
pub fn counterexample_config(n: usize) -> Result<Configuration<BigRational>> {
    if n < 5 {
        return Err(Error::Domain(format!(
            "no connectivity-breaking configuration exists for n = {n} <= 4"
        )));
    }
    let mut xs = vec![-1, 0, 1, 2, 2];
    xs.extend((0..n - 5).map(|k| if k % 2 == 0 { -1 } else { 2 }));
    let config = Configuration::new(
        xs.into_iter().map(|x| vec![ratio(x, 1)]).collect(),
        ratio(1, 1),
    )?;

    let before = is_connected(&build_profile(&config));
    let after = is_connected(&build_profile(&update_step(&config)));
    if !before || after {
        return Err(Error::Domain(format!(
            "construction for n = {n} does not break connectivity (t=0 connected: {before}, t=1 connected: {after})"
        )));
    }
    Ok(config)
}
