//! Random exact configurations shared by the property and acceptance suites.
//!
//! Coordinates and epsilon are drawn on a lattice `k / q` so that exact
//! boundary ties (distance exactly `eps`) occur often.

#![allow(dead_code)]

use hk_consensus::scalar::ratio;
use hk_consensus::Configuration;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Exact = Configuration<BigRational>;

pub const DENOMS: [i64; 8] = [2, 3, 4, 6, 8, 12, 30, 97];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n * d` lattice coordinates in `[0, 2]` and `eps` in `(0, 1]`.
pub fn lattice_config(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Exact {
    let q = DENOMS[rng.random_range(0..DENOMS.len())];
    let coords = (0..n * d)
        .map(|_| ratio(rng.random_range(0..=2 * q), q))
        .collect();
    Configuration::from_flat(d, coords, ratio(rng.random_range(1..=q), q)).unwrap()
}

/// Points on the line inside `[0, span * eps]`, with `eps = e / q`.
pub fn narrow_line(rng: &mut ChaCha8Rng, n: usize, span_num: i64, span_den: i64) -> Exact {
    let q = [12i64, 24, 60, 97, 120][rng.random_range(0..5)];
    let e = rng.random_range(q / 4..=q);
    let top = e * span_num / span_den;
    let coords = (0..n)
        .map(|_| ratio(rng.random_range(0..=top), q))
        .collect();
    Configuration::from_flat(1, coords, ratio(e, q)).unwrap()
}

/// Uniform float configuration rounded to exact binary rationals.
pub fn float_config(rng: &mut ChaCha8Rng, n: usize, d: usize, eps: f64) -> Configuration<f64> {
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Configuration::from_flat(d, coords, eps).unwrap()
}

/// Proptest strategy over lattice configurations.
pub fn arb_config(
    n: std::ops::RangeInclusive<usize>,
    d: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Exact> {
    arb_lattice(n, d, DENOMS.to_vec())
}

/// Like [`arb_config`] with power-of-two denominators, so every input and
/// every squared distance is exact in `f64` and boundary ties survive conversion.
pub fn arb_dyadic_config(
    n: std::ops::RangeInclusive<usize>,
    d: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Exact> {
    arb_lattice(n, d, vec![2, 4, 8, 16, 64, 1024])
}

fn arb_lattice(
    n: std::ops::RangeInclusive<usize>,
    d: std::ops::RangeInclusive<usize>,
    denoms: Vec<i64>,
) -> impl Strategy<Value = Exact> {
    (n, d, prop::sample::select(denoms))
        .prop_flat_map(|(n, d, q)| {
            (
                Just(d),
                Just(q),
                prop::collection::vec(0..=2 * q, n * d),
                1..=q,
            )
        })
        .prop_map(|(d, q, nums, e)| {
            let coords = nums.into_iter().map(|k| ratio(k, q)).collect();
            Configuration::from_flat(d, coords, ratio(e, q)).unwrap()
        })
}

/// A violated invariant, described for the failure message.
pub type Check = Result<(), String>;

fn dist_sq(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .fold(ratio(0, 1), |acc, v| acc + v)
}

/// Pairwise bound along every edge, with the smaller neighborhood first.
pub fn check_pairwise_bound(c: &Exact) -> Check {
    let next = update_step(c);
    let nbrs = all_neighbors(c);
    let eps = c.epsilon();
    for &(i, j) in &build_profile(c).edges {
        for (a, b) in [(i, j), (j, i)] {
            let (na, nb) = (&nbrs[a - 1], &nbrs[b - 1]);
            if na.len() > nb.len() {
                continue;
            }
            let common = BigRational::from_integer(na.intersection_len(nb).into());
            let weight = ratio(2, nb.len() as i64) + ratio(1, na.len() as i64);
            let bound = eps * (ratio(3, 1) - common * weight);
            let d2 = dist_sq(next.opinion(a).unwrap(), next.opinion(b).unwrap());
            if bound < ratio(0, 1) || d2 > &bound * &bound {
                return Err(format!(
                    "edge ({a},{b}): |x'|^2 = {d2}, bound = {bound}, config {c:?}"
                ));
            }
        }
    }
    Ok(())
}

/// Connected stays connected; only meaningful for `n <= 4`.
pub fn check_connected_preserved(c: &Exact) -> Check {
    if is_connected(&build_profile(c)) && !is_connected(&build_profile(&update_step(c))) {
        return Err(format!("connectivity lost: {c:?}"));
    }
    Ok(())
}

/// On the line, weak order of every pair survives one step.
pub fn check_order_preserved(c: &Exact) -> Check {
    let x = c.coords();
    let next = update_step(c);
    let y = next.coords();
    for i in 0..x.len() {
        for j in 0..x.len() {
            if x[i] <= x[j] && y[i] > y[j] {
                return Err(format!("agents {} <= {} reversed: {c:?}", i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// On the line, a disconnected profile stays disconnected.
pub fn check_disconnected_preserved(c: &Exact) -> Check {
    if !is_connected(&build_profile(c)) && is_connected(&build_profile(&update_step(c))) {
        return Err(format!("disconnected profile reconnected: {c:?}"));
    }
    Ok(())
}

/// For every witness whose gaps are within `eps / 2`, the same gaps are
/// strictly below `eps / 2` after one step. Returns whether any witness applied.
pub fn check_gap_contraction(c: &Exact) -> Result<bool, String> {
    let (m, _) = star_indices(c.n()).unwrap();
    let half = c.epsilon().half();
    let next = update_step(c);
    let mut applied = false;
    for i in 0..=m {
        if star_star_gaps(c, i).unwrap().iter().all(|g| *g <= half) {
            applied = true;
            let after = star_star_gaps(&next, i).unwrap();
            if after.iter().any(|g| *g >= half) {
                return Err(format!(
                    "witness {i}: gaps {after:?} not below {half}: {c:?}"
                ));
            }
        }
    }
    Ok(applied)
}

/// `(*)` at `t` implies `(*)` at `t + 1`. Returns whether `(*)` held at `t`.
pub fn check_star_preserved(c: &Exact) -> Result<bool, String> {
    if !satisfies_star(c).unwrap() {
        return Ok(false);
    }
    if !satisfies_star(&update_step(c)).unwrap() {
        return Err(format!("(*) lost after one step: {c:?}"));
    }
    Ok(true)
}

pub use hk_consensus::opinion::{all_neighbors, update_step};
pub use hk_consensus::profile::{
    build_profile, is_connected, satisfies_star, star_indices, star_star_gaps,
};
pub use hk_consensus::Scalar;
