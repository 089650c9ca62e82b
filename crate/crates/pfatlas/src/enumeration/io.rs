//! Solution-set interchange: CSV layout, import validation, set comparison.

use super::{
    dedup::solution_distance, Completeness, EnumDiagnostics, EnumMethod, SolutionSet,
};
use crate::power_flow::{PfModel, SolverConfig, VoltageVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// CSV form: header `e1,f1,...,en,fn`, one row per solution with interleaved
/// rectangular components over all buses (slack included).
pub(crate) fn to_csv(set: &SolutionSet) -> String {
    let mut out = String::new();
    let n = set
        .solutions
        .first()
        .map(|s| s.voltages.len())
        .unwrap_or(0);
    let header: Vec<String> = (1..=n).flat_map(|i| [format!("e{i}"), format!("f{i}")]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for sol in &set.solutions {
        let row: Vec<String> = sol
            .voltages
            .as_slice()
            .iter()
            .flat_map(|v| [format!("{}", v.re), format!("{}", v.im)])
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse the CSV layout above. A non-numeric first row is treated as a
/// header. Returns `(source_row_number, voltages)` pairs.
pub fn import_csv_rows(text: &str) -> Result<Vec<(usize, VoltageVector)>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if values.len() % 2 != 0 || values.is_empty() {
                    return Err(format!(
                        "row {}: expected an even number of components, got {}",
                        lineno + 1,
                        values.len()
                    ));
                }
                let v: Vec<Complex64> = values
                    .chunks_exact(2)
                    .map(|p| Complex64::new(p[0], p[1]))
                    .collect();
                out.push((lineno + 1, VoltageVector::new(v)));
            }
            Err(_) if lineno == 0 => continue, // header
            Err(e) => return Err(format!("row {}: {e}", lineno + 1)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct ImportOutcome {
    pub set: SolutionSet,
    pub rejected: Vec<RejectedRow>,
}

/// Validation-first import: a row becomes a member only if it passes the
/// residual contract against `model` as-is (no polishing), with the slack
/// entry at the case setpoint. Violators are reported, never silently
/// dropped.
pub fn validate_imported(
    model: &PfModel,
    lambda: f64,
    rows: Vec<(usize, VoltageVector)>,
    solver: SolverConfig,
) -> ImportOutcome {
    let mut rejected = Vec::new();
    let mut accepted = Vec::new();
    for (row, v) in rows {
        if v.len() != model.bus_count() {
            rejected.push(RejectedRow {
                row,
                reason: format!(
                    "expected {} buses, row has {}",
                    model.bus_count(),
                    v.len()
                ),
            });
            continue;
        }
        let slack = model.slack_index();
        let slack_err = (v.get(slack) - model.slack_voltage()).norm();
        if slack_err > solver.dedup_tolerance {
            rejected.push(RejectedRow {
                row,
                reason: format!("slack entry off setpoint by {slack_err:e}"),
            });
            continue;
        }
        let norm = model
            .mismatch_norm(&v)
            .expect("dimension checked above");
        if norm < solver.tolerance {
            accepted.push(model.solution_from_voltages(&v));
        } else {
            rejected.push(RejectedRow {
                row,
                reason: format!("residual {norm:e} violates the {:e} contract", solver.tolerance),
            });
        }
    }
    let set = SolutionSet::build(
        model,
        lambda,
        EnumMethod::Imported,
        Completeness::Heuristic,
        solver,
        EnumDiagnostics::default(),
        accepted,
    );
    ImportOutcome { set, rejected }
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("sets were produced for different problems (fingerprint or lambda differ)")]
    FingerprintMismatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedPair {
    pub a_index: usize,
    pub b_index: usize,
    pub distance: f64,
}

/// Asymmetric difference of two sets under the dedup metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffReport {
    pub tolerance: f64,
    pub matched: Vec<MatchedPair>,
    pub a_only: Vec<usize>,
    pub b_only: Vec<usize>,
}

impl DiffReport {
    pub fn unmatched(&self) -> usize {
        self.a_only.len() + self.b_only.len()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} matched, {} a-only, {} b-only ({} unmatched)",
            self.matched.len(),
            self.a_only.len(),
            self.b_only.len(),
            self.unmatched()
        );
        s
    }
}

/// Match solutions of `a` against `b` greedily in canonical order, nearest
/// unmatched partner within `tol` first.
pub fn compare_sets(a: &SolutionSet, b: &SolutionSet, tol: f64) -> Result<DiffReport, CompareError> {
    if a.fingerprint != b.fingerprint || a.lambda != b.lambda {
        return Err(CompareError::FingerprintMismatch);
    }
    let mut taken = vec![false; b.solutions.len()];
    let mut matched = Vec::new();
    let mut a_only = Vec::new();
    for (i, sol) in a.solutions.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, other) in b.solutions.iter().enumerate() {
            if taken[j] {
                continue;
            }
            let d = solution_distance(sol, other);
            if d <= tol && best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) => {
                taken[j] = true;
                matched.push(MatchedPair {
                    a_index: i,
                    b_index: j,
                    distance: d,
                });
            }
            None => a_only.push(i),
        }
    }
    let b_only = taken
        .iter()
        .enumerate()
        .filter(|(_, t)| !**t)
        .map(|(j, _)| j)
        .collect();
    Ok(DiffReport {
        tolerance: tol,
        matched,
        a_only,
        b_only,
    })
}
