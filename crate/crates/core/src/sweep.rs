//! Parameter sweeps over `(n, eps)` grids and their tabular output.
//!
//! A [`SweepSpec`] names the agent counts, the epsilon grid, the Monte Carlo
//! events and the closed-form bounds to evaluate. [`run_figure_sweep`] emits
//! one [`Row`] per event and per bound in every cell, in the order the sweep lists them, and the
//! result depends only on the sweep (never on the worker count).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundName;
use crate::bounds::BoundValue;
use crate::error::{Error, Result};
use crate::estimator::{estimate, DynamicsParams, Event, McRequest};
use crate::scalar::ScalarMode;

pub const CSV_HEADER: [&str; 10] = [
    "kind", "name", "n", "d", "eps", "value", "stderr", "trials", "seed", "branch",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?} (csv or jsonl)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub n_list: Vec<usize>,
    pub d: usize,
    pub eps_grid: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub events: Vec<Event>,
    pub bounds: Vec<BoundName>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub dynamics: DynamicsParams,
    /// Worker threads; `0` lets the pool pick.
    pub workers: usize,
}

impl SweepSpec {
    /// Checks every cell before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Validation("n_list is empty".into()));
        }
        if self.eps_grid.is_empty() {
            return Err(Error::Validation("eps_grid is empty".into()));
        }
        if let Some(bad) = self.eps_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Validation(format!(
                "eps_grid value {bad} is outside (0, 1)"
            )));
        }
        if let Some(w) = self.eps_grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "eps_grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if self.trials == 0 && !self.events.is_empty() {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if self.events.is_empty() && self.bounds.is_empty() {
            return Err(Error::Validation(
                "nothing to compute: no events and no bounds".into(),
            ));
        }
        if self.dynamics.cap == Some(0) || self.dynamics.tol.is_nan() || self.dynamics.tol <= 0.0 {
            return Err(Error::Validation("cap must be >= 1 and tol > 0".into()));
        }
        for &n in &self.n_list {
            for event in &self.events {
                event
                    .validate(n, self.d)
                    .map_err(|e| Error::Validation(format!("cell n={n}, d={}: {e}", self.d)))?;
            }
            for bound in &self.bounds {
                bound
                    .validate(n, self.d)
                    .map_err(|e| Error::Validation(format!("cell n={n}, d={}: {e}", self.d)))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Mc,
    Bound,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Mc => "mc",
            RowKind::Bound => "bound",
        }
    }
}

/// One result line; Monte Carlo rows always carry `stderr`, `trials` and `seed`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub kind: RowKind,
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub value: f64,
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub branch: Option<String>,
    pub cap_reached: Option<u64>,
}

/// Rows of one `(n, eps)` cell, handed to the progress callback.
pub struct Cell<'a> {
    pub n: usize,
    pub eps: f64,
    pub rows: &'a [Row],
}

pub fn run_figure_sweep(spec: &SweepSpec) -> Result<Vec<Row>> {
    run_figure_sweep_with(spec, |_| {})
}

/// Like [`run_figure_sweep`], calling `on_cell` after each finished cell.
pub fn run_figure_sweep_with(
    spec: &SweepSpec,
    mut on_cell: impl FnMut(&Cell<'_>),
) -> Result<Vec<Row>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let mut rows = Vec::new();
    for &n in &spec.n_list {
        for &eps in &spec.eps_grid {
            let start = rows.len();
            for &event in &spec.events {
                let req = McRequest::new(event, n, spec.d, eps, spec.trials, spec.master_seed)
                    .with_dynamics(spec.dynamics);
                let est = pool.install(|| estimate(&req))?;
                rows.push(Row {
                    kind: RowKind::Mc,
                    name: event.to_string(),
                    n,
                    d: spec.d,
                    eps,
                    value: est.p_hat,
                    stderr: Some(est.stderr),
                    trials: Some(est.trials),
                    seed: Some(spec.master_seed),
                    branch: None,
                    cap_reached: (event == Event::Consensus).then_some(est.cap_reached),
                });
            }
            for &bound in &spec.bounds {
                let v = bound.evaluate(n, spec.d, eps)?;
                rows.push(Row {
                    kind: RowKind::Bound,
                    name: bound.to_string(),
                    n,
                    d: spec.d,
                    eps,
                    value: v.value,
                    stderr: None,
                    trials: None,
                    seed: None,
                    branch: v.branch,
                    cap_reached: None,
                });
            }
            on_cell(&Cell {
                n,
                eps,
                rows: &rows[start..],
            });
        }
    }
    Ok(rows)
}

/// `%.17g`-style rendering: 17 significant digits, trailing zeros dropped.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0".to_string()
        } else {
            x.to_string()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_g17(v: Option<f64>) -> String {
    v.map(format_g17).unwrap_or_default()
}

/// Writes the CSV table (header plus one line per row) to `writer`.
pub fn write_csv<W: Write>(rows: &[Row], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record([
            row.kind.as_str().to_string(),
            row.name.clone(),
            row.n.to_string(),
            row.d.to_string(),
            format_g17(row.eps),
            format_g17(row.value),
            opt_g17(row.stderr),
            row.trials.map(|t| t.to_string()).unwrap_or_default(),
            row.seed.map(|s| s.to_string()).unwrap_or_default(),
            row.branch.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per row.
pub fn write_jsonl<W: Write>(rows: &[Row], mut writer: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut writer, row)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `path` atomically: the bytes go to a temporary sibling that is
/// renamed into place only after `fill` succeeds.
pub fn write_atomically(path: &Path, fill: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn emit_csv(rows: &[Row], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Validation("refusing to write an empty table".into()));
    }
    write_atomically(path, |f| write_csv(rows, f))
}

pub fn emit_jsonl(rows: &[Row], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Validation("refusing to write an empty table".into()));
    }
    write_atomically(path, |f| write_jsonl(rows, f))
}

pub fn emit(rows: &[Row], path: &Path, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => emit_csv(rows, path),
        OutputFormat::Jsonl => emit_jsonl(rows, path),
    }
}

/// Evaluates every bound at every `(n, eps)`, skipping none: an invalid
/// combination is an error naming it.
pub fn bounds_table(
    bounds: &[BoundName],
    n_list: &[usize],
    d: usize,
    eps_grid: &[f64],
) -> Result<Vec<BoundValue>> {
    let mut out = Vec::new();
    for &bound in bounds {
        for &n in n_list {
            for &eps in eps_grid {
                out.push(bound.evaluate(n, d, eps).map_err(|e| match e {
                    Error::Domain(msg) => {
                        Error::Domain(format!("{bound} at n={n}, d={d}, eps={eps}: {msg}"))
                    }
                    other => other,
                })?);
            }
        }
    }
    Ok(out)
}

pub const BOUNDS_HEADER: [&str; 6] = ["name", "n", "d", "eps", "branch", "value"];

pub fn write_bounds_csv<W: Write>(values: &[BoundValue], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(BOUNDS_HEADER)?;
    for v in values {
        w.write_record([
            v.name.to_string(),
            v.n.to_string(),
            v.d.to_string(),
            format_g17(v.eps),
            v.branch.clone().unwrap_or_default(),
            format_g17(v.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `"a:b:step"` (inclusive range) or a comma-separated list.
pub fn parse_eps_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Validation(format!("malformed eps grid {s:?}: {what}"));
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((start, rest)) = s.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| bad("expected start:stop:step"))?;
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(t));
        let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // rounded to 12 decimals so 0.1 + 2 * 0.1 prints as 0.3
        Ok((0..count)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
            .collect()
    }
}

/// Parses a comma-separated list of `T`, allowing `a-b` integer ranges for counts.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let bad = |t: &str| Error::Validation(format!("malformed n list entry {t:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| bad(part))?;
            let b: usize = b.trim().parse().map_err(|_| bad(part))?;
            if b < a {
                return Err(bad(part));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    Ok(out)
}

/// Optional sweep file; every key mirrors a [`SweepSpec`] field and command
/// line flags take precedence over it.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub n_list: Option<Vec<usize>>,
    pub d: Option<usize>,
    pub eps_grid: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub master_seed: Option<u64>,
    pub events: Option<Vec<Event>>,
    pub bounds: Option<Vec<BoundName>>,
    pub output_path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub cap: Option<usize>,
    pub tol: Option<f64>,
    pub mode: Option<ScalarMode>,
    pub workers: Option<usize>,
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_101;

/// `0.05, 0.10, ..., 0.95`
pub fn default_eps_grid() -> Vec<f64> {
    parse_eps_grid("0.05:0.95:0.05").expect("static grid parses")
}

/// The panels of the consensus-bounds figure on the unit interval.
///
/// * `n = 2..=4`: consensus against its exact value, plus the connected,
///   `eps`-trivial and half-`eps` ball curves;
/// * `n = 5..=7`: the same, with `(*)` in place of the exact value;
/// * `n = 10`: the same, with `(**)` and `eps`-trivial-or-`(**)`.
pub fn consensus_figure_panels(
    trials: u64,
    master_seed: u64,
    dynamics: DynamicsParams,
    workers: usize,
) -> Vec<SweepSpec> {
    use Event::*;
    let base = |n_list: Vec<usize>, extra_events: &[Event], extra_bounds: &[BoundName]| {
        let mut events = vec![Consensus, Connected0, EpsTrivial0, HalfEpsBall0];
        events.extend_from_slice(extra_events);
        let mut bounds = extra_bounds.to_vec();
        bounds.extend([BoundName::EpsTrivial1D, BoundName::HalfEpsBall1D]);
        SweepSpec {
            n_list,
            d: 1,
            eps_grid: default_eps_grid(),
            trials,
            master_seed,
            events,
            bounds,
            output_path: None,
            format: OutputFormat::Csv,
            dynamics,
            workers,
        }
    };
    vec![
        base(vec![2, 3, 4], &[], &[BoundName::ExactConsensus1D]),
        base(vec![5, 6, 7], &[Star0], &[]),
        base(vec![10], &[StarStar0, EpsTrivialOrStarStar0], &[]),
    ]
}
