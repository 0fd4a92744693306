//! Profile graphs and the structural predicates evaluated on them.
//!
//! The profile of a configuration is the undirected graph on agents with an
//! edge between every pair at distance at most `epsilon`. On top of it this
//! module decides connectivity, `delta`-triviality and the two order-statistic
//! conditions used as consensus certificates on the line:
//!
//! * `(*)`: with `m = floor((n - 4) / 3)` and `k = n - m - 1`, ranks `m + 2`
//!   and `k` are adjacent and `x_(n) - x_(k) + x_(m+2) - x_(1) <= epsilon`;
//! * `(**)`: for some `0 <= i <= m`, the three gaps `x_(n) - x_(n-i-1)`,
//!   `x_(n-i-1) - x_(i+2)` and `x_(i+2) - x_(1)` are all at most `epsilon / 2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::opinion::{diameter_sq, Configuration};
use crate::scalar::Scalar;

/// Undirected profile graph; edges are 1-based `(i, j)` with `i < j`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Profile {
    pub fn degree(&self, agent: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == agent || b == agent)
            .count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }

    /// Connected components as sorted lists of 1-based agents, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n);
        for &(a, b) in &self.edges {
            uf.union(a - 1, b - 1);
        }
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for v in 0..self.n {
            by_root[uf.find(v)].push(v + 1);
        }
        let mut comps: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
        comps.sort_by_key(|c| c[0]);
        comps
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.n);
        for &(a, b) in &self.edges {
            uf.union(a - 1, b - 1);
        }
        uf.count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("profile serializes")
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns `true` if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    pub fn count(&self) -> usize {
        self.sets
    }
}

pub fn build_profile<S: Scalar>(config: &Configuration<S>) -> Profile {
    let n = config.n();
    let eps_sq = config.epsilon_sq();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if config.distance_sq(i, j) <= eps_sq {
                edges.push((i + 1, j + 1));
            }
        }
    }
    Profile { n, edges }
}

/// One component; a single agent counts as connected.
pub fn is_connected(profile: &Profile) -> bool {
    profile.component_count() == 1
}

/// Number of profile components of `config`.
///
/// On the line the profile is connected iff every consecutive gap of the
/// sorted opinions is at most `epsilon`, which avoids building the graph.
pub fn component_count<S: Scalar>(config: &Configuration<S>) -> usize {
    if config.dim() == 1 {
        let sorted = sorted_values(config.coords());
        1 + sorted
            .windows(2)
            .filter(|w| w[1].clone() - w[0].clone() > config.epsilon().clone())
            .count()
    } else {
        build_profile(config).component_count()
    }
}

/// `true` iff every pair of agents is within `delta` (inclusive).
pub fn is_delta_trivial<S: Scalar>(config: &Configuration<S>, delta: &S) -> Result<bool> {
    if *delta < S::zero() {
        return Err(Error::InvalidArgument(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    Ok(diameter_sq(config) <= delta.clone() * delta.clone())
}

/// Ranks of a one-dimensional configuration: `permutation[r - 1]` is the
/// 1-based agent holding the `r`-th smallest opinion. Ties go to the lower index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderStatistics {
    pub permutation: Vec<usize>,
}

impl OrderStatistics {
    pub fn new<S: Scalar>(config: &Configuration<S>) -> Result<Self> {
        let xs = config.scalar_opinions()?;
        let mut permutation: Vec<usize> = (0..xs.len()).collect();
        // stable, so equal values keep ascending index order
        permutation.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("opinions are comparable"));
        Ok(Self {
            permutation: permutation.into_iter().map(|i| i + 1).collect(),
        })
    }

    /// Agent holding rank `r` (1-based).
    pub fn agent(&self, rank: usize) -> usize {
        self.permutation[rank - 1]
    }

    /// Opinion values in rank order.
    pub fn values<S: Scalar>(&self, config: &Configuration<S>) -> Vec<S> {
        self.permutation
            .iter()
            .map(|&a| config.coords()[a - 1].clone())
            .collect()
    }
}

fn sorted_values<S: Scalar>(xs: &[S]) -> Vec<S> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("opinions are comparable"));
    v
}

/// `(m, k)` with `m = floor((n - 4) / 3)` and `k = n - m - 1`; defined for `n >= 4`.
pub fn star_indices(n: usize) -> Result<(usize, usize)> {
    if n < 4 {
        return Err(Error::Domain(format!(
            "order-statistic conditions need n >= 4, got {n}"
        )));
    }
    let m = (n - 4) / 3;
    Ok((m, n - m - 1))
}

fn star_domain<S: Scalar>(config: &Configuration<S>) -> Result<(Vec<S>, usize, usize)> {
    let xs = config.scalar_opinions()?;
    let (m, k) = star_indices(xs.len())?;
    Ok((sorted_values(xs), m, k))
}

/// Condition `(*)` on a one-dimensional configuration with `n >= 4`.
pub fn satisfies_star<S: Scalar>(config: &Configuration<S>) -> Result<bool> {
    let (x, m, k) = star_domain(config)?;
    let n = x.len();
    let eps = config.epsilon().clone();
    // x is 0-based: x_(r) = x[r - 1]
    let link = x[k - 1].clone() - x[m + 1].clone() <= eps;
    let outer = x[n - 1].clone() - x[k - 1].clone() + x[m + 1].clone() - x[0].clone() <= eps;
    Ok(link && outer)
}

/// The three `(**)` gaps for witness `i`, in the order
/// `(x_(n) - x_(n-i-1), x_(n-i-1) - x_(i+2), x_(i+2) - x_(1))`.
pub fn star_star_gaps<S: Scalar>(config: &Configuration<S>, i: usize) -> Result<[S; 3]> {
    let (x, m, _) = star_domain(config)?;
    if i > m {
        return Err(Error::Domain(format!("witness {i} exceeds m = {m}")));
    }
    let n = x.len();
    let hi = &x[n - i - 2];
    let lo = &x[i + 1];
    Ok([
        x[n - 1].clone() - hi.clone(),
        hi.clone() - lo.clone(),
        lo.clone() - x[0].clone(),
    ])
}

/// Condition `(**)`; returns the smallest witness `i` when it holds.
pub fn satisfies_star_star<S: Scalar>(config: &Configuration<S>) -> Result<Option<usize>> {
    let (_, m, _) = star_domain(config)?;
    let half = config.epsilon().half();
    for i in 0..=m {
        if star_star_gaps(config, i)?.iter().all(|g| *g <= half) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}
