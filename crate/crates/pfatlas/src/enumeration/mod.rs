//! Enumeration of distinct power-flow solutions for one (case, lambda) pair.
//!
//! Two routes are provided. Total-degree homotopy tracks every start path of
//! the complexified quadratic system and is provably exhaustive when no path
//! fails; its cost is `2^(2n-2)` paths, so it is gated behind a bus-count
//! ceiling. Multi-start deflation scales to any case but is heuristic by
//! construction, and its sets are always flagged as such.

mod dedup;
mod homotopy;
mod io;
mod multistart;

pub use dedup::{canonical_sort, dedup, solution_distance};
pub use homotopy::TrackerConfig;
pub use io::{
    compare_sets, import_csv_rows, validate_imported, CompareError, DiffReport, ImportOutcome,
    MatchedPair, RejectedRow,
};

use crate::model::{CaseError, NetworkCase};
use crate::power_flow::{PfModel, PowerFlowError, PowerFlowSolution, SolverConfig};
use homotopy::{PathOutcome, TotalDegreeHomotopy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnumMethod {
    HomotopyTotalDegree,
    MultiStartDeflation,
    Imported,
}

/// Whether a set is exhaustive by construction or best-effort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Completeness {
    Proven,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodSelect {
    /// Total degree when the case fits under the ceiling, else multi-start.
    Auto,
    TotalDegree,
    MultiStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    pub method: MethodSelect,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Largest bus count accepted by the total-degree route.
    pub total_degree_bus_ceiling: usize,
    /// Largest number of homotopy paths accepted.
    pub path_budget: usize,
    /// Path failures above this threshold make a result warn-worthy.
    pub path_failure_budget: usize,
    /// Random multi-start samples.
    pub multistart_samples: usize,
    /// Stop multi-start after this many samples without a new root.
    pub saturation_window: usize,
    /// Random starts are drawn component-wise from [-box, box].
    pub sample_box: f64,
    pub include_flat_seed: bool,
    pub include_grounded_seeds: bool,
    pub tracker: TrackerConfig,
}

impl Default for EnumConfig {
    fn default() -> Self {
        Self {
            method: MethodSelect::Auto,
            seed: 0,
            solver: SolverConfig::default(),
            total_degree_bus_ceiling: 8,
            path_budget: 1 << 14,
            path_failure_budget: 0,
            multistart_samples: 2000,
            saturation_window: 500,
            sample_box: 1.5,
            include_flat_seed: true,
            include_grounded_seeds: true,
            tracker: TrackerConfig::default(),
        }
    }
}

/// Health counters carried with every set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumDiagnostics {
    pub paths_tracked: usize,
    pub path_failures: usize,
    pub diverged_paths: usize,
    pub complex_endpoints: usize,
    pub starts_used: usize,
    pub newton_divergences: usize,
    pub saturated: bool,
    /// Candidates dropped by the residual re-check at insertion.
    pub rejected_on_insert: usize,
}

/// Deduplicated, canonically ordered solutions for one (case, lambda) pair.
///
/// Every member satisfies the residual contract; membership is re-verified
/// from scratch on insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub fingerprint: String,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularized_epsilon: Option<f64>,
    pub method: EnumMethod,
    pub complete: Completeness,
    pub solver: SolverConfig,
    pub diagnostics: EnumDiagnostics,
    pub solutions: Vec<PowerFlowSolution>,
}

#[derive(Debug, Error)]
pub enum EnumError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Config(#[from] PowerFlowError),
    #[error("case has {buses} buses, above the total-degree ceiling {ceiling}")]
    SizeCeiling { buses: usize, ceiling: usize },
    #[error("total degree needs {needed} paths, above the budget {budget}")]
    PathBudget { needed: u128, budget: usize },
}

impl SolutionSet {
    /// Assemble a set from candidate solutions: recompute every residual,
    /// drop violators, dedup, and sort canonically.
    pub fn build(
        model: &PfModel,
        lambda: f64,
        method: EnumMethod,
        complete: Completeness,
        solver: SolverConfig,
        mut diagnostics: EnumDiagnostics,
        candidates: Vec<PowerFlowSolution>,
    ) -> SolutionSet {
        let mut verified = Vec::with_capacity(candidates.len());
        for cand in candidates {
            match model.mismatch_norm(&cand.voltages) {
                Ok(norm) if norm < solver.tolerance => {
                    let mut sol = model.solution_from_voltages(&cand.voltages);
                    sol.label = cand.label;
                    verified.push(sol);
                }
                _ => diagnostics.rejected_on_insert += 1,
            }
        }
        let solutions = dedup(verified, solver.dedup_tolerance);
        SolutionSet {
            fingerprint: model.case().fingerprint(),
            lambda,
            regularized_epsilon: None,
            method,
            complete,
            solver,
            diagnostics,
            solutions,
        }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution set serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<SolutionSet, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per solution, interleaved rectangular components.
    pub fn to_csv(&self) -> String {
        io::to_csv(self)
    }
}

/// Track every total-degree start path of the complexified system.
///
/// Real endpoints (imaginary parts below 1e-8 after the endgame polish) are
/// refined in real arithmetic and collected; `complete` is `Proven` exactly
/// when no path failed.
pub fn enumerate_total_degree(
    case: &NetworkCase,
    lambda: f64,
    cfg: &EnumConfig,
) -> Result<SolutionSet, EnumError> {
    cfg.solver.validate()?;
    let model = PfModel::new(case)?;
    if model.bus_count() > cfg.total_degree_bus_ceiling {
        return Err(EnumError::SizeCeiling {
            buses: model.bus_count(),
            ceiling: cfg.total_degree_bus_ceiling,
        });
    }
    let tracker = TotalDegreeHomotopy::new(&model, cfg.seed, cfg.tracker);
    let needed = tracker.path_count();
    if needed > cfg.path_budget as u128 {
        return Err(EnumError::PathBudget {
            needed,
            budget: cfg.path_budget,
        });
    }

    let paths = needed as usize;
    let outcomes = crate::par::map_indices(paths, |k| tracker.track(k as u128));

    let mut diagnostics = EnumDiagnostics {
        paths_tracked: paths,
        ..EnumDiagnostics::default()
    };
    let mut candidates = Vec::new();
    for outcome in outcomes {
        match outcome {
            PathOutcome::Converged(z) => {
                let max_imag = z.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
                if max_imag < 1e-8 {
                    let x: Vec<f64> = z.iter().map(|c| c.re).collect();
                    match polish_real(&model, &x, &cfg.solver) {
                        Some(sol) => candidates.push(sol),
                        None => diagnostics.newton_divergences += 1,
                    }
                } else {
                    diagnostics.complex_endpoints += 1;
                }
            }
            PathOutcome::Diverged => diagnostics.diverged_paths += 1,
            PathOutcome::Failed => diagnostics.path_failures += 1,
        }
    }
    let complete = if diagnostics.path_failures == 0 {
        Completeness::Proven
    } else {
        Completeness::Heuristic
    };
    Ok(SolutionSet::build(
        &model,
        lambda,
        EnumMethod::HomotopyTotalDegree,
        complete,
        cfg.solver,
        diagnostics,
        candidates,
    ))
}

/// Real-arithmetic polish of a near-real endpoint. Tries to push the
/// mismatch to 1e-12 for crisp deduplication, falling back to the contract
/// tolerance near ill-conditioned (fold) points.
fn polish_real(model: &PfModel, x: &[f64], solver: &SolverConfig) -> Option<PowerFlowSolution> {
    let v = model.unpack(x);
    let tight = SolverConfig {
        tolerance: solver.tolerance.min(1e-12),
        ..*solver
    };
    match model.newton_refine(&v, &tight) {
        Ok(sol) => Some(sol),
        Err(_) => model.newton_refine(&v, solver).ok(),
    }
}

/// Seeded multi-start with deflation; heuristic by contract.
pub fn enumerate_multistart(
    case: &NetworkCase,
    lambda: f64,
    cfg: &EnumConfig,
) -> Result<SolutionSet, EnumError> {
    cfg.solver.validate()?;
    let model = PfModel::new(case)?;
    let (candidates, stats) = multistart::run(&model, cfg);
    let diagnostics = EnumDiagnostics {
        starts_used: stats.starts_used,
        newton_divergences: stats.divergences,
        saturated: stats.saturated,
        ..EnumDiagnostics::default()
    };
    Ok(SolutionSet::build(
        &model,
        lambda,
        EnumMethod::MultiStartDeflation,
        Completeness::Heuristic,
        cfg.solver,
        diagnostics,
        candidates,
    ))
}

/// Dispatch on method selection and case size.
pub fn enumerate(case: &NetworkCase, lambda: f64, cfg: &EnumConfig) -> Result<SolutionSet, EnumError> {
    match cfg.method {
        MethodSelect::TotalDegree => enumerate_total_degree(case, lambda, cfg),
        MethodSelect::MultiStart => enumerate_multistart(case, lambda, cfg),
        MethodSelect::Auto => {
            if case.buses.len() <= cfg.total_degree_bus_ceiling {
                enumerate_total_degree(case, lambda, cfg)
            } else {
                enumerate_multistart(case, lambda, cfg)
            }
        }
    }
}
