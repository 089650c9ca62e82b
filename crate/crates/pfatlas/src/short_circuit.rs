//! Classification of "short circuit" solutions.
//!
//! A transit bus carries exactly zero injection, so its power balance
//! `V_i * conj(I_i) = 0` is satisfied either by `I_i = 0` (the physical,
//! open-transit reading) or by `V_i = 0` with current still arriving — a
//! legitimate numerical solution that violates Kirchhoff's current law at
//! that bus. The latter solves the power-flow problem grounded at bus i, not
//! the physical network.

use crate::model::{BusId, BusKind, NetworkCase};
use crate::power_flow::{PfModel, PowerFlowSolution};
use crate::enumeration::SolutionSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionKind {
    Regular,
    ShortCircuit,
}

/// Per-bus evidence attached to a classification: voltage and current
/// magnitudes at a flagged transit bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusEvidence {
    pub bus: BusId,
    pub voltage: f64,
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationLabel {
    pub kind: SolutionKind,
    /// Transit buses pinned at zero volts; empty iff Regular.
    pub grounded_buses: Vec<BusId>,
    pub evidence: Vec<BusEvidence>,
    /// Transit buses where voltage and current both vanished. Classified
    /// Regular but worth surfacing; the mechanism gives no ruling for them.
    pub anomalies: Vec<BusId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// A transit-bus voltage below this is treated as grounded, p.u.
    pub v_zero_tolerance: f64,
    /// A current above this is a genuine KCL violation, p.u.
    pub i_nonzero_tolerance: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        // Three orders of margin over the 1e-9 residual contract: |V| at a
        // grounded root refines to roughly mismatch scale.
        Self {
            v_zero_tolerance: 1e-6,
            i_nonzero_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Error)]
pub enum ShortCircuitError {
    #[error("solution is not classified ShortCircuit")]
    NotShortCircuit,
    #[error("solution set was produced for a different case")]
    FingerprintMismatch,
}

/// Classify one solution against the transit buses of `case`.
///
/// Only transit buses are inspected: a near-zero voltage at a loaded PQ bus
/// is physically meaningful, not a KCL violation.
pub fn classify_solution(
    case: &NetworkCase,
    model: &PfModel,
    sol: &PowerFlowSolution,
    cfg: &ClassifyConfig,
) -> ClassificationLabel {
    let mut grounded = Vec::new();
    let mut evidence = Vec::new();
    let mut anomalies = Vec::new();
    for id in case.detect_transit_buses() {
        let idx = case.bus_index(id).expect("transit bus exists");
        debug_assert_eq!(case.buses[idx].kind, BusKind::Pq);
        let v = sol.voltages.magnitude(idx);
        let i = model.current_magnitude(&sol.voltages, idx);
        if v < cfg.v_zero_tolerance {
            if i > cfg.i_nonzero_tolerance {
                grounded.push(id);
                evidence.push(BusEvidence {
                    bus: id,
                    voltage: v,
                    current: i,
                });
            } else {
                log::warn!(
                    "transit bus {id}: voltage {v:e} and current {i:e} both vanish; \
                     classifying Regular"
                );
                anomalies.push(id);
            }
        }
    }
    ClassificationLabel {
        kind: if grounded.is_empty() {
            SolutionKind::Regular
        } else {
            SolutionKind::ShortCircuit
        },
        grounded_buses: grounded,
        evidence,
        anomalies,
    }
}

/// Phantom ground currents of a ShortCircuit solution: for each grounded bus
/// the magnitude of the current that would have to flow into the ground for
/// the solution to satisfy KCL. Nonzero values confirm the solution solves
/// the grounded problem, not the physical one.
pub fn kcl_check(
    model: &PfModel,
    sol: &PowerFlowSolution,
    label: &ClassificationLabel,
) -> Result<Vec<(BusId, f64)>, ShortCircuitError> {
    if label.kind != SolutionKind::ShortCircuit {
        return Err(ShortCircuitError::NotShortCircuit);
    }
    Ok(label
        .grounded_buses
        .iter()
        .map(|&id| {
            let idx = model.case().bus_index(id).expect("grounded bus exists");
            (id, model.current_magnitude(&sol.voltages, idx))
        })
        .collect())
}

/// Label every solution of a set in place and return the labelled set.
pub fn classify_set(
    set: &SolutionSet,
    case: &NetworkCase,
    cfg: &ClassifyConfig,
) -> Result<SolutionSet, ShortCircuitError> {
    if set.fingerprint != case.fingerprint() {
        return Err(ShortCircuitError::FingerprintMismatch);
    }
    let model = PfModel::new(case).expect("case validated by fingerprint producer");
    let mut out = set.clone();
    let labels = crate::par::map_ordered(&out.solutions, |sol| {
        classify_solution(case, &model, sol, cfg)
    });
    for (sol, label) in out.solutions.iter_mut().zip(labels) {
        sol.label = Some(label);
    }
    Ok(out)
}

/// `(n_total, n_short_circuit)` using default classification tolerances.
pub fn count_short_circuit(
    set: &SolutionSet,
    case: &NetworkCase,
) -> Result<(usize, usize), ShortCircuitError> {
    let labelled = classify_set(set, case, &ClassifyConfig::default())?;
    let sc = labelled
        .solutions
        .iter()
        .filter(|s| {
            s.label
                .as_ref()
                .map(|l| l.kind == SolutionKind::ShortCircuit)
                .unwrap_or(false)
        })
        .count();
    Ok((labelled.solutions.len(), sc))
}
