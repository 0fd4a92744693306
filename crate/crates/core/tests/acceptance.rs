//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use common::*;
use hk_consensus::bounds::{
    consensus_exact_1d, cube_ball_lower_bound, eps_trivial_prob_1d, half_eps_ball_prob_1d,
};
use hk_consensus::dynamics::counterexample_config;
use hk_consensus::estimator::{
    estimate, initial_event_holds, run_trial, sample_initial, Event, McEstimate, McRequest,
};
use hk_consensus::scalar::ratio;
use hk_consensus::ScalarMode;
use rand::Rng;

const SEED: u64 = 0x00AC_CE55;

fn tenths() -> impl Iterator<Item = f64> {
    (1..=9).map(|k| k as f64 / 10.0)
}

/// `|p_hat - p| <= 3 sigma`, with sigma the larger of the estimate's standard
/// error and the binomial standard error at `p`. The second term keeps a
/// vanishing reference (`p_hat = 0`, zero estimated error) comparable.
fn within_3_sigma(est: &McEstimate, p: f64) -> bool {
    let null_se = (p * (1.0 - p) / est.trials as f64).sqrt();
    (est.p_hat - p).abs() <= 3.0 * est.stderr.max(null_se)
}

/// Id, title and check.
type Criterion = (&'static str, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn ac1_exact_consensus() -> Verdict {
    let mut hits = 0;
    let mut misses = Vec::new();
    for n in 2..=4 {
        for eps in tenths() {
            let est =
                estimate(&McRequest::new(Event::Consensus, n, 1, eps, 100_000, SEED)).unwrap();
            let exact = consensus_exact_1d(n, eps).unwrap();
            if within_3_sigma(&est, exact.value) {
                hits += 1;
            } else {
                let branch = exact.branch.unwrap_or_default();
                misses.push(format!(
                    "n={n} eps={eps} p_hat={} exact={} {branch}",
                    est.p_hat, exact.value
                ));
            }
        }
    }
    Verdict {
        pass: hits >= 25,
        detail: format!("{hits}/27 cells within 3 sigma (need 25); misses: {misses:?}"),
    }
}

fn closed_form_grid(event: Event, formula: fn(usize, f64) -> hk_consensus::Result<f64>) -> Verdict {
    let mut misses = Vec::new();
    let mut cells = 0;
    for n in 2..=10 {
        for eps in tenths() {
            cells += 1;
            let est = estimate(&McRequest::new(event, n, 1, eps, 100_000, SEED)).unwrap();
            let p = formula(n, eps).unwrap();
            if !within_3_sigma(&est, p) {
                misses.push(format!("n={n} eps={eps} p_hat={} p={p}", est.p_hat));
            }
        }
    }
    Verdict {
        pass: misses.is_empty(),
        detail: format!(
            "{}/{cells} cells within 3 sigma; misses: {misses:?}",
            cells - misses.len()
        ),
    }
}

fn ac4_cube_ball_bound() -> Verdict {
    let mut failures = Vec::new();
    let mut worst_margin = f64::INFINITY;
    for d in [2, 3] {
        for n in [2, 3] {
            for eps in [0.3, 0.5, 0.7] {
                let est =
                    estimate(&McRequest::new(Event::Consensus, n, d, eps, 10_000, SEED)).unwrap();
                let bound = cube_ball_lower_bound(n, d, eps).unwrap();
                let margin = est.p_hat - 3.0 * est.stderr - bound;
                worst_margin = worst_margin.min(margin);
                if margin < 0.0 {
                    failures.push(format!(
                        "d={d} n={n} eps={eps}: p_hat={} bound={bound}",
                        est.p_hat
                    ));
                }
            }
        }
    }
    Verdict {
        pass: failures.is_empty(),
        detail: format!("12 cells, smallest p_hat - 3 sigma - bound = {worst_margin:.4}; failures: {failures:?}"),
    }
}

fn ac5_sandwich() -> Verdict {
    let mut failures = Vec::new();
    for eps in [0.2, 0.3, 0.4, 0.5, 0.6] {
        let est = |event| estimate(&McRequest::new(event, 10, 1, eps, 10_000, SEED)).unwrap();
        let (lo, mid, hi) = (
            est(Event::EpsTrivialOrStarStar0),
            est(Event::Consensus),
            est(Event::Connected0),
        );
        let lower_ok = lo.p_hat - 3.0 * lo.stderr <= mid.p_hat + 3.0 * mid.stderr;
        let upper_ok = mid.p_hat - 3.0 * mid.stderr <= hi.p_hat + 3.0 * hi.stderr;
        if !(lower_ok && upper_ok) {
            failures.push(format!(
                "eps={eps}: {} <= {} <= {}",
                lo.p_hat, mid.p_hat, hi.p_hat
            ));
        }
    }
    Verdict {
        pass: failures.is_empty(),
        detail: format!("5 cells at n=10; failures: {failures:?}"),
    }
}

fn ac6_counterexample() -> Verdict {
    let c = counterexample_config(5).unwrap();
    let next = update_step(&c);
    let expected = [
        ratio(-1, 2),
        ratio(0, 1),
        ratio(5, 4),
        ratio(5, 3),
        ratio(5, 3),
    ];
    let mut ok = next.coords() == &expected[..]
        && is_connected(&build_profile(&c))
        && !is_connected(&build_profile(&next));
    let mut broken = Vec::new();
    for n in 6..=10 {
        let c = counterexample_config(n).unwrap();
        let holds =
            is_connected(&build_profile(&c)) && !is_connected(&build_profile(&update_step(&c)));
        ok &= holds;
        if holds {
            broken.push(n);
        }
    }
    Verdict {
        pass: ok,
        detail: format!(
            "x(1) = {:?}; connectivity break for n = 5 and {broken:?}",
            next.coords()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
        ),
    }
}

const INVARIANT_CASES: usize = 10_000;

/// Draws cases until `INVARIANT_CASES` satisfy the hypothesis, counting violations.
fn suite(
    name: &str,
    rng: &mut rand_chacha::ChaCha8Rng,
    draw: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Exact,
    check: impl Fn(&Exact) -> Result<bool, String>,
) -> (bool, String) {
    let (mut applied, mut drawn, mut violations) = (0, 0, Vec::new());
    while applied < INVARIANT_CASES && drawn < 50 * INVARIANT_CASES {
        drawn += 1;
        let c = draw(rng);
        match check(&c) {
            Ok(true) => applied += 1,
            Ok(false) => {}
            Err(e) => {
                applied += 1;
                violations.push(e);
            }
        }
    }
    let pass = applied >= INVARIANT_CASES && violations.is_empty();
    let first = violations
        .first()
        .map(|v| format!(" first: {v}"))
        .unwrap_or_default();
    (
        pass,
        format!(
            "{name} {applied} cases/{} violations{first}",
            violations.len()
        ),
    )
}

fn ac7_invariant_suites() -> Verdict {
    let mut rng = rng(SEED);
    let always = |check: fn(&Exact) -> Check| move |c: &Exact| check(c).map(|()| true);
    let results = [
        suite(
            "pairwise-bound",
            &mut rng,
            |r| {
                let (n, d) = (r.random_range(2..=8), r.random_range(1..=3));
                lattice_config(r, n, d)
            },
            always(check_pairwise_bound),
        ),
        suite(
            "connected-preserving",
            &mut rng,
            |r| {
                let (n, d) = (r.random_range(1..=4), r.random_range(1..=3));
                lattice_config(r, n, d)
            },
            |c| {
                let applies = is_connected(&build_profile(c));
                check_connected_preserved(c).map(|()| applies)
            },
        ),
        suite(
            "order-preserving",
            &mut rng,
            |r| {
                let n = r.random_range(2..=8);
                lattice_config(r, n, 1)
            },
            always(check_order_preserved),
        ),
        suite(
            "disconnected-preserving",
            &mut rng,
            |r| {
                let n = r.random_range(2..=8);
                lattice_config(r, n, 1)
            },
            |c| {
                let applies = !is_connected(&build_profile(c));
                check_disconnected_preserved(c).map(|()| applies)
            },
        ),
        suite(
            "gap-contraction",
            &mut rng,
            |r| {
                let n = r.random_range(4..=8);
                narrow_line(r, n, 3, 2)
            },
            check_gap_contraction,
        ),
    ];
    Verdict {
        pass: results.iter().all(|(p, _)| *p),
        detail: results
            .iter()
            .map(|(_, d)| d.as_str())
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn ac8_small_n_equality() -> Verdict {
    let mut mismatches = Vec::new();
    let mut trials = 0;
    for n in 2..=4 {
        for eps in [0.3, 0.6] {
            let mut req = McRequest::new(Event::Consensus, n, 1, eps, 10_000, SEED);
            req.dynamics.mode = ScalarMode::ExactRational;
            for k in 0..req.trials {
                trials += 1;
                let c = sample_initial(n, 1, eps, k, SEED).unwrap();
                let connected = initial_event_holds(Event::Connected0, &c).unwrap();
                if run_trial(&req, k).unwrap().success != connected {
                    mismatches.push(format!("n={n} eps={eps} trial={k}"));
                }
            }
        }
    }
    Verdict {
        pass: mismatches.is_empty(),
        detail: format!(
            "{trials} paired exact trials, {} mismatches {mismatches:?}",
            mismatches.len()
        ),
    }
}

fn ac9_figure_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_hkc"))
            .args([
                "figure",
                "--trials",
                "400",
                "--seed",
                "2024",
                "--workers",
                workers,
                "--out",
            ])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    match (run("a.csv", "1"), run("b.csv", "1"), run("c.csv", "4")) {
        (Ok(a), Ok(b), Ok(c)) => Verdict {
            pass: a == b && a == c && !a.is_empty(),
            detail: format!(
                "{} bytes, {} rows; repeat identical: {}, 4 workers identical: {}",
                a.len(),
                a.iter().filter(|&&b| b == b'\n').count() - 1,
                a == b,
                a == c
            ),
        },
        (a, b, c) => Verdict {
            pass: false,
            detail: format!("figure run failed: {:?}", [a.err(), b.err(), c.err()]),
        },
    }
}

fn ac10_continuity() -> Verdict {
    let mut worst = 0.0f64;
    for (n, eps, value) in [
        (3, 0.5, 0.75),
        (4, 1.0 / 3.0, 4.0 / 9.0),
        (4, 0.5, 13.0 / 16.0),
    ] {
        let branches = hk_consensus::bounds::consensus_exact_branches(n).unwrap();
        for b in branches.iter().filter(|b| b.lo == eps || b.hi == eps) {
            worst = worst.max(((b.eval)(eps) - value).abs());
        }
        worst = worst.max((consensus_exact_1d(n, eps).unwrap().value - value).abs());
    }
    Verdict {
        pass: worst <= 1e-12,
        detail: format!("largest deviation at breakpoints {worst:e}"),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "AC1",
            "exact consensus probabilities for n <= 4",
            ac1_exact_consensus,
        ),
        ("AC2", "eps-trivial closed form", || {
            closed_form_grid(Event::EpsTrivial0, eps_trivial_prob_1d)
        }),
        ("AC3", "half-eps ball closed form", || {
            closed_form_grid(Event::HalfEpsBall0, half_eps_ball_prob_1d)
        }),
        (
            "AC4",
            "cube-ball lower bound in d = 2, 3",
            ac4_cube_ball_bound,
        ),
        ("AC5", "consensus sandwich at n = 10", ac5_sandwich),
        (
            "AC6",
            "connectivity-breaking configurations",
            ac6_counterexample,
        ),
        ("AC7", "exact invariant suites", ac7_invariant_suites),
        (
            "AC8",
            "consensus iff connected for n <= 4",
            ac8_small_n_equality,
        ),
        ("AC9", "figure sweep determinism", ac9_figure_determinism),
        ("AC10", "piecewise continuity", ac10_continuity),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        let start = Instant::now();
        let v = run();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += !v.pass as usize;
        println!(
            "[{tag}] {id} {title} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
