//! Load-scaling sweeps: per-lambda enumeration counts and saddle-node
//! bracketing.

use crate::analytics::{apply_limits, LimitSpec};
use crate::enumeration::{enumerate, Completeness, EnumConfig, EnumMethod};
use crate::model::NetworkCase;
use crate::short_circuit::{classify_set, ClassifyConfig, SolutionKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub n_total: usize,
    /// Solutions classified ShortCircuit (included in `n_total`).
    pub n_short_circuit: usize,
    pub n_within_limits: usize,
    /// Refinements that failed to converge; a health metric, not a count of
    /// missing solutions.
    pub n_divergences: usize,
    pub method: EnumMethod,
    pub complete: Completeness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Fingerprint of the unscaled base case.
    pub base_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularized_epsilon: Option<f64>,
    pub config: EnumConfig,
    pub records: Vec<SweepRecord>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("bad lambda grid: {0}")]
    BadGrid(String),
    #[error("bad bracket: {0}")]
    BadBracket(String),
}

impl SweepResult {
    /// CSV rows `lambda,n_total,n_short_circuit,n_within_limits,n_divergences`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,n_total,n_short_circuit,n_within_limits,n_divergences\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.lambda, r.n_total, r.n_short_circuit, r.n_within_limits, r.n_divergences
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serialization cannot fail")
    }
}

/// Expand a `start:stop:step` grid specification, endpoints inclusive.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, SweepError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(SweepError::BadGrid(format!(
            "`{spec}` is not of the form start:stop:step"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| SweepError::BadGrid(format!("bad number `{p}`")))
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || start < 0.0 || stop < start {
        return Err(SweepError::BadGrid(format!(
            "degenerate range {start}:{stop}:{step}"
        )));
    }
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let lambda = start + step * k as f64;
        if lambda > stop + step * 1e-9 {
            break;
        }
        grid.push(lambda.min(stop));
        k += 1;
    }
    Ok(grid)
}

fn validate_grid(grid: &[f64]) -> Result<(), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::BadGrid("grid is empty".into()));
    }
    if grid.iter().any(|l| *l < 0.0 || !l.is_finite()) {
        return Err(SweepError::BadGrid("lambdas must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::BadGrid("grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Enumerate at every grid point and aggregate counts.
///
/// Each point scales the base loads, optionally applies the
/// epsilon-injection, enumerates from scratch (no warm starting, so records
/// stay comparable), classifies, and filters by the case-file limits.
/// Failures at one point are recorded on its row and never abort the sweep.
pub fn run_load_sweep(
    case: &NetworkCase,
    grid: &[f64],
    cfg: &EnumConfig,
    regularize: Option<f64>,
) -> Result<SweepResult, SweepError> {
    validate_grid(grid)?;
    let records = crate::par::map_ordered(grid, |&lambda| {
        sweep_point(case, lambda, cfg, regularize)
    });
    Ok(SweepResult {
        base_fingerprint: case.fingerprint(),
        regularized_epsilon: regularize,
        config: cfg.clone(),
        records,
    })
}

fn sweep_point(
    case: &NetworkCase,
    lambda: f64,
    cfg: &EnumConfig,
    regularize: Option<f64>,
) -> SweepRecord {
    let scaled = case.scale_loads(lambda);
    let failed = |msg: String| SweepRecord {
        lambda,
        n_total: 0,
        n_short_circuit: 0,
        n_within_limits: 0,
        n_divergences: 0,
        method: EnumMethod::MultiStartDeflation,
        complete: Completeness::Heuristic,
        error: Some(msg),
    };
    let work = match regularize {
        Some(eps) => match scaled.regularize_transit_buses_with(
            eps,
            crate::model::RegularizeOptions {
                reactive: false,
                mismatch_tolerance: cfg.solver.tolerance,
            },
        ) {
            Ok(c) => c,
            Err(e) => return failed(e.to_string()),
        },
        None => scaled,
    };
    let mut set = match enumerate(&work, lambda, cfg) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string()),
    };
    set.regularized_epsilon = regularize;
    let labelled = classify_set(&set, &work, &ClassifyConfig::default())
        .expect("set was enumerated on this case");
    let n_short_circuit = labelled
        .solutions
        .iter()
        .filter(|s| {
            s.label
                .as_ref()
                .map(|l| l.kind == SolutionKind::ShortCircuit)
                .unwrap_or(false)
        })
        .count();
    let (within, _report) = apply_limits(&labelled, &work, &LimitSpec::from_case(&work))
        .expect("limit spec from case is valid");
    SweepRecord {
        lambda,
        n_total: labelled.len(),
        n_short_circuit,
        n_within_limits: within.len(),
        n_divergences: labelled.diagnostics.newton_divergences
            + labelled.diagnostics.path_failures,
        method: labelled.method,
        complete: labelled.complete,
        error: None,
    }
}

/// Enumerate once; the solution count drives the bisection below.
fn count_at(case: &NetworkCase, lambda: f64, cfg: &EnumConfig) -> Result<usize, SweepError> {
    let scaled = case.scale_loads(lambda);
    enumerate(&scaled, lambda, cfg)
        .map(|s| s.len())
        .map_err(|e| SweepError::BadBracket(e.to_string()))
}

/// Bisect the 2-to-0 transition of the solution count onto an interval of
/// width at most `width`, bracketing the voltage-collapse point.
pub fn nose_point_bracket(
    case: &NetworkCase,
    lo: f64,
    hi: f64,
    cfg: &EnumConfig,
    width: f64,
) -> Result<(f64, f64), SweepError> {
    if !(lo < hi) {
        return Err(SweepError::BadBracket(format!("lo {lo} must be below hi {hi}")));
    }
    let n_lo = count_at(case, lo, cfg)?;
    if n_lo < 2 {
        return Err(SweepError::BadBracket(format!(
            "expected at least 2 solutions at lo = {lo}, found {n_lo}"
        )));
    }
    let n_hi = count_at(case, hi, cfg)?;
    if n_hi != 0 {
        return Err(SweepError::BadBracket(format!(
            "expected 0 solutions at hi = {hi}, found {n_hi}"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if count_at(case, mid, cfg)? == 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}
