//! Opinion configurations and the synchronous bounded-confidence update.
//!
//! A [`Configuration`] holds `n` opinion vectors in `R^d` together with the
//! confidence bound `epsilon`. One call to [`update_step`] replaces every
//! opinion by the plain average of the opinions within Euclidean distance
//! `epsilon` of it (the agent itself included).
//!
//! Agents are numbered `1..=n` on the public surface.

use num_rational::BigRational;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};

/// Opinions of `n` agents in `R^d` plus the confidence bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration<S> {
    dim: usize,
    coords: Vec<S>,
    epsilon: S,
}

impl<S: Scalar> Configuration<S> {
    /// Builds a configuration from one coordinate vector per agent.
    pub fn new(opinions: Vec<Vec<S>>, epsilon: S) -> Result<Self> {
        let dim = opinions.first().map(Vec::len).ok_or_else(|| {
            Error::InvalidArgument("configuration needs at least one agent".into())
        })?;
        if let Some((idx, bad)) = opinions.iter().enumerate().find(|(_, o)| o.len() != dim) {
            return Err(Error::InvalidArgument(format!(
                "agent {} has {} coordinates, expected {dim}",
                idx + 1,
                bad.len()
            )));
        }
        Self::from_flat(dim, opinions.into_iter().flatten().collect(), epsilon)
    }

    /// Builds a configuration from row-major coordinates (`n * dim` values).
    pub fn from_flat(dim: usize, coords: Vec<S>, epsilon: S) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "opinion dimension must be at least 1".into(),
            ));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates cannot be split into {dim}-dimensional opinions",
                coords.len()
            )));
        }
        if epsilon.partial_cmp(&S::zero()) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if S::MODE == ScalarMode::Float64 {
            let finite = coords
                .iter()
                .chain(std::iter::once(&epsilon))
                .all(|c| c.to_f64().is_finite());
            if !finite {
                return Err(Error::InvalidArgument("coordinates must be finite".into()));
            }
        }
        Ok(Self {
            dim,
            coords,
            epsilon,
        })
    }

    /// Same dimension and epsilon, new coordinates.
    fn with_coords(&self, coords: Vec<S>) -> Self {
        debug_assert_eq!(coords.len(), self.coords.len());
        Self {
            dim: self.dim,
            coords,
            epsilon: self.epsilon.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> &S {
        &self.epsilon
    }

    pub fn mode(&self) -> ScalarMode {
        S::MODE
    }

    /// Row-major coordinates.
    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    /// Opinion of `agent` (1-based).
    pub fn opinion(&self, agent: usize) -> Result<&[S]> {
        self.check_agent(agent)?;
        Ok(self.row(agent - 1))
    }

    /// Opinions in agent order.
    pub fn opinions(&self) -> impl ExactSizeIterator<Item = &[S]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Coordinates of a one-dimensional configuration, in agent order.
    pub fn scalar_opinions(&self) -> Result<&[S]> {
        if self.dim == 1 {
            Ok(&self.coords)
        } else {
            Err(Error::Domain(format!(
                "expected d = 1, configuration has d = {}",
                self.dim
            )))
        }
    }

    pub(crate) fn row(&self, idx: usize) -> &[S] {
        &self.coords[idx * self.dim..(idx + 1) * self.dim]
    }

    pub(crate) fn check_agent(&self, agent: usize) -> Result<()> {
        if (1..=self.n()).contains(&agent) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "agent index {agent} out of range 1..={}",
                self.n()
            )))
        }
    }

    /// Squared Euclidean distance between the 0-based rows `a` and `b`.
    pub(crate) fn distance_sq(&self, a: usize, b: usize) -> S {
        squared_distance(self.row(a), self.row(b))
    }

    pub(crate) fn epsilon_sq(&self) -> S {
        self.epsilon.clone() * self.epsilon.clone()
    }

    /// Inclusive neighborhood test on 0-based rows, tolerance-free.
    pub(crate) fn within_epsilon(&self, a: usize, b: usize) -> bool {
        self.distance_sq(a, b) <= self.epsilon_sq()
    }

    pub fn to_json(&self) -> Value {
        let opinions = self
            .opinions()
            .map(|row| Value::Array(row.iter().map(Scalar::to_json).collect()))
            .collect();
        serde_json::json!({
            "epsilon": self.epsilon.to_json(),
            "dim": self.dim,
            "opinions": Value::Array(opinions),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let raw: RawConfiguration = serde_json::from_value(value.clone())?;
        let epsilon = S::from_json(&raw.epsilon)?;
        let opinions = raw
            .opinions
            .iter()
            .map(|row| row.iter().map(S::from_json).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = opinions.iter().position(|row| row.len() != raw.dim) {
            return Err(Error::InvalidArgument(format!(
                "agent {} has {} coordinates but dim is {}",
                bad + 1,
                opinions[bad].len(),
                raw.dim
            )));
        }
        Self::new(opinions, epsilon)
    }
}

#[derive(Deserialize)]
struct RawConfiguration {
    epsilon: Value,
    dim: usize,
    opinions: Vec<Vec<Value>>,
}

impl<S: Scalar> Serialize for Configuration<S> {
    fn serialize<Ser: Serializer>(
        &self,
        serializer: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Configuration<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Self::from_json(&value).map_err(D::Error::custom)
    }
}

impl Configuration<f64> {
    /// Exact rational image of a float configuration.
    pub fn to_exact(&self) -> Configuration<BigRational> {
        let conv = |v: &f64| <BigRational as Scalar>::from_f64(*v).expect("validated finite");
        Configuration {
            dim: self.dim,
            coords: self.coords.iter().map(conv).collect(),
            epsilon: conv(&self.epsilon),
        }
    }
}

impl Configuration<BigRational> {
    /// Nearest-double image of an exact configuration.
    pub fn to_float(&self) -> Configuration<f64> {
        Configuration {
            dim: self.dim,
            coords: self.coords.iter().map(Scalar::to_f64).collect(),
            epsilon: Scalar::to_f64(&self.epsilon),
        }
    }
}

pub(crate) fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| {
        let diff = x.clone() - y.clone();
        acc + diff.clone() * diff
    })
}

/// The neighborhood `N_i` of one agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NeighborSet {
    pub agent: usize,
    /// Sorted, 1-based, always contains `agent`.
    pub members: Vec<usize>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.members.binary_search(&agent).is_ok()
    }

    /// `|N_i ∩ N_j|`
    pub fn intersection_len(&self, other: &NeighborSet) -> usize {
        let (mut a, mut b) = (
            self.members.iter().peekable(),
            other.members.iter().peekable(),
        );
        let mut count = 0;
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a.next();
                    b.next();
                }
            }
        }
        count
    }
}

/// `{ j : ‖x_j − x_i‖ ≤ ε }` for the 1-based `agent`.
pub fn neighbors<S: Scalar>(config: &Configuration<S>, agent: usize) -> Result<NeighborSet> {
    config.check_agent(agent)?;
    let i = agent - 1;
    let members = (0..config.n())
        .filter(|&j| j == i || config.within_epsilon(i, j))
        .map(|j| j + 1)
        .collect();
    Ok(NeighborSet { agent, members })
}

/// Neighborhoods of every agent as sorted 0-based index lists.
pub(crate) fn neighbor_lists<S: Scalar>(config: &Configuration<S>) -> Vec<Vec<usize>> {
    let n = config.n();
    let eps_sq = config.epsilon_sq();
    let mut lists: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i + 1..n {
            if config.distance_sq(i, j) <= eps_sq {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
    }
    for list in &mut lists {
        list.sort_unstable();
    }
    lists
}

/// All neighborhoods, 1-based.
pub fn all_neighbors<S: Scalar>(config: &Configuration<S>) -> Vec<NeighborSet> {
    neighbor_lists(config)
        .into_iter()
        .enumerate()
        .map(|(i, members)| NeighborSet {
            agent: i + 1,
            members: members.into_iter().map(|j| j + 1).collect(),
        })
        .collect()
}

/// One synchronous step: every opinion becomes the mean of its neighborhood.
pub fn update_step<S: Scalar>(config: &Configuration<S>) -> Configuration<S> {
    let dim = config.dim();
    let lists = neighbor_lists(config);
    let mut coords = Vec::with_capacity(config.coords.len());
    for members in &lists {
        let count = S::from_count(members.len());
        for c in 0..dim {
            // Ascending index order, so agents sharing a neighborhood compute identical means.
            let sum = members.iter().fold(S::zero(), |acc, &j| {
                acc + config.coords[j * dim + c].clone()
            });
            coords.push(sum / count.clone());
        }
    }
    config.with_coords(coords)
}

/// Largest squared pairwise distance; exact in rational mode.
pub fn diameter_sq<S: Scalar>(config: &Configuration<S>) -> S {
    let n = config.n();
    let mut best = S::zero();
    for i in 0..n {
        for j in i + 1..n {
            let d = config.distance_sq(i, j);
            if d > best {
                best = d;
            }
        }
    }
    best
}

/// Largest pairwise Euclidean distance.
pub fn diameter<S: Scalar>(config: &Configuration<S>) -> f64 {
    diameter_sq(config).to_f64().sqrt()
}
