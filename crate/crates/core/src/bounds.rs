//! Closed-form consensus probabilities and bounds for i.i.d. uniform initial
//! opinions on the unit cube.
//!
//! Piecewise formulas are kept as explicit branch tables so every branch can
//! be evaluated on its own (continuity checks at the breakpoints rely on this).
//! Polynomials are transcribed term by term without simplification.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundName {
    /// Ball-in-cube lower bound on the consensus probability, any dimension.
    Cor1CubeBall,
    /// Exact consensus probability on the line for `n` in `{2, 3, 4}`.
    ExactConsensus1D,
    /// Probability that the initial profile is `epsilon`-trivial on the line.
    EpsTrivial1D,
    /// Probability that every agent starts within `epsilon / 2` of agent 1 on the line.
    HalfEpsBall1D,
}

impl BoundName {
    pub const ALL: [BoundName; 4] = [
        BoundName::Cor1CubeBall,
        BoundName::ExactConsensus1D,
        BoundName::EpsTrivial1D,
        BoundName::HalfEpsBall1D,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::Cor1CubeBall => "Cor1CubeBall",
            BoundName::ExactConsensus1D => "ExactConsensus1D",
            BoundName::EpsTrivial1D => "EpsTrivial1D",
            BoundName::HalfEpsBall1D => "HalfEpsBall1D",
        }
    }

    /// Checks that the bound is defined for `(n, d)`.
    pub fn validate(self, n: usize, d: usize) -> Result<()> {
        if n == 0 || d == 0 {
            return Err(Error::Domain(format!("{self} needs n >= 1 and d >= 1")));
        }
        match self {
            BoundName::Cor1CubeBall => Ok(()),
            _ if d != 1 => Err(Error::Domain(format!(
                "{self} is only defined for d = 1, got d = {d}"
            ))),
            BoundName::ExactConsensus1D if !(2..=4).contains(&n) => Err(Error::Domain(format!(
                "{self} has a closed form only for n in {{2, 3, 4}}, got n = {n}"
            ))),
            _ => Ok(()),
        }
    }

    /// Evaluates the named bound at `(n, d, eps)`.
    pub fn evaluate(self, n: usize, d: usize, eps: f64) -> Result<BoundValue> {
        self.validate(n, d)?;
        let (value, branch) = match self {
            BoundName::Cor1CubeBall => (cube_ball_lower_bound(n, d, eps)?, None),
            BoundName::ExactConsensus1D => {
                let v = consensus_exact_1d(n, eps)?;
                (v.value, v.branch)
            }
            BoundName::EpsTrivial1D => (eps_trivial_prob_1d(n, eps)?, None),
            BoundName::HalfEpsBall1D => (half_eps_ball_prob_1d(n, eps)?, None),
        };
        Ok(BoundValue {
            name: self,
            n,
            d,
            eps,
            value,
            branch,
        })
    }
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundName::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bound {s:?}")))
    }
}

/// A closed-form probability evaluated at `(n, d, eps)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundValue {
    pub name: BoundName,
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub value: f64,
    /// Present iff the formula is piecewise in `eps`.
    pub branch: Option<String>,
}

/// One piece of a piecewise formula: `eval` applies on the interval from `lo`
/// to `hi` (open at `hi`, closed at `lo` iff `lo_closed`).
#[derive(Clone, Copy)]
pub struct Branch {
    pub label: &'static str,
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub eval: fn(f64) -> f64,
}

impl Branch {
    pub fn contains(&self, eps: f64) -> bool {
        let above = if self.lo_closed {
            eps >= self.lo
        } else {
            eps > self.lo
        };
        above && eps < self.hi
    }
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("label", &self.label)
            .finish()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// Lebesgue measure of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(PI.powf(d as f64 / 2.0) / gamma_half_integer(d + 2))
}

/// `Gamma(k / 2)` for `k >= 1`, from `Gamma(1) = 1`, `Gamma(1/2) = sqrt(pi)`
/// and `Gamma(x + 1) = x Gamma(x)`.
pub fn gamma_half_integer(k: usize) -> f64 {
    assert!(k >= 1, "Gamma(k/2) needs k >= 1");
    let (mut value, mut x) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x < k as f64 / 2.0 {
        value *= x;
        x += 1.0;
    }
    value
}

/// `((eps/2)^d * vol(B(0,1)))^(n-1) * (1 - eps)^d`
pub fn cube_ball_lower_bound(n: usize, d: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let ball = (eps / 2.0).powi(d as i32) * unit_ball_volume(d)?;
    Ok(ball.powi(n as i32 - 1) * (1.0 - eps).powi(d as i32))
}

fn n2(e: f64) -> f64 {
    e * (2.0 - e)
}

fn n3_low(e: f64) -> f64 {
    6.0 * e.powi(2) * (1.0 - e)
}

fn n3_high(e: f64) -> f64 {
    1.0 - 2.0 * (1.0 - e).powi(3)
}

fn n4_low(e: f64) -> f64 {
    24.0 * e.powi(3) * (1.0 - 3.0 * e) + 36.0 * e.powi(4)
}

fn n4_mid(e: f64) -> f64 {
    19.0 * e.powi(4) - 4.0 * e.powi(3) * (1.0 - 2.0 * e) + (1.0 - 2.0 * e).powi(4)
        - 6.0 * e.powi(2) * (3.0 * e - 1.0).powi(2)
        - 4.0 * e * (1.0 - 2.0 * e).powi(3)
        + 12.0 * e.powi(3) * (1.0 - 2.0 * e)
        + 12.0 * e.powi(2) * (1.0 - 2.0 * e).powi(2)
}

fn n4_high(e: f64) -> f64 {
    e.powi(4)
        + 4.0 * e.powi(3) * (1.0 - e)
        + 6.0 * e.powi(2) * (1.0 - e).powi(2)
        + 4.0 * e * (1.0 - e).powi(3)
        - 2.0 * (1.0 - e).powi(4)
}

const N2_BRANCHES: [Branch; 1] = [Branch {
    label: "eps in (0,1)",
    lo: 0.0,
    lo_closed: false,
    hi: 1.0,
    eval: n2,
}];

const N3_BRANCHES: [Branch; 2] = [
    Branch {
        label: "eps in (0,1/2)",
        lo: 0.0,
        lo_closed: false,
        hi: 0.5,
        eval: n3_low,
    },
    Branch {
        label: "eps in [1/2,1)",
        lo: 0.5,
        lo_closed: true,
        hi: 1.0,
        eval: n3_high,
    },
];

const N4_BRANCHES: [Branch; 3] = [
    Branch {
        label: "eps in (0,1/3)",
        lo: 0.0,
        lo_closed: false,
        hi: 1.0 / 3.0,
        eval: n4_low,
    },
    Branch {
        label: "eps in [1/3,1/2)",
        lo: 1.0 / 3.0,
        lo_closed: true,
        hi: 0.5,
        eval: n4_mid,
    },
    Branch {
        label: "eps in [1/2,1)",
        lo: 0.5,
        lo_closed: true,
        hi: 1.0,
        eval: n4_high,
    },
];

/// Branch table of the exact consensus probability for `n` in `{2, 3, 4}`.
pub fn consensus_exact_branches(n: usize) -> Result<&'static [Branch]> {
    match n {
        2 => Ok(&N2_BRANCHES),
        3 => Ok(&N3_BRANCHES),
        4 => Ok(&N4_BRANCHES),
        _ => Err(Error::Domain(format!(
            "exact consensus probability is only available for n in {{2, 3, 4}}, got n = {n}"
        ))),
    }
}

/// Exact consensus probability on the line for `n` in `{2, 3, 4}`.
///
/// The branch label is reported for the piecewise cases `n = 3, 4`.
pub fn consensus_exact_1d(n: usize, eps: f64) -> Result<BoundValue> {
    let branches = consensus_exact_branches(n)?;
    check_eps(eps)?;
    let branch = branches
        .iter()
        .find(|b| b.contains(eps))
        .expect("branches cover (0, 1)");
    Ok(BoundValue {
        name: BoundName::ExactConsensus1D,
        n,
        d: 1,
        eps,
        value: (branch.eval)(eps),
        branch: (branches.len() > 1).then(|| branch.label.to_string()),
    })
}

/// `eps^(n-1) * [n - (n-1) eps]`
pub fn eps_trivial_prob_1d(n: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(eps.powi(n as i32 - 1) * (nf - (nf - 1.0) * eps))
}

/// `(2/n) eps^n (1 - 2^-n) + eps^(n-1) (1 - eps)`
pub fn half_eps_ball_prob_1d(n: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(
        2.0 / nf * eps.powi(n as i32) * (1.0 - 0.5f64.powi(n as i32))
            + eps.powi(n as i32 - 1) * (1.0 - eps),
    )
}
