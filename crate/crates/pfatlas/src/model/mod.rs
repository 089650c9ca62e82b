//! Network case model: buses, branches, generators, loads.
//!
//! A [`NetworkCase`] is the immutable problem description. All powers are
//! stored in per-unit on `base_mva`; conversion from physical units happens
//! at parse time only.

mod admittance;
mod matpower;

pub use admittance::AdmittanceMatrix;
pub use matpower::{parse_case, parse_case_named};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

/// External bus number as it appears in the case file.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Complex power demand, p.u. (positive = consumption).
    pub load: Complex64,
    /// Shunt admittance to ground, p.u.
    pub shunt: Complex64,
    /// Voltage magnitude limits, p.u.
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    /// Series impedance, p.u.
    pub impedance: Complex64,
    /// Total line charging susceptance, p.u. (half at each end).
    pub charging: f64,
    /// Off-nominal tap ratio at the from end; 1.0 = none.
    pub tap: f64,
    /// Phase shift at the from end, degrees.
    pub shift_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    /// Active power setpoint, p.u.
    pub p_set: f64,
    /// Voltage magnitude setpoint, p.u.
    pub v_set: f64,
    /// Reactive capability, p.u.
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid case: {0}")]
    Validation(String),
    #[error("branch {from}-{to} has zero series impedance")]
    SingularBranch { from: BusId, to: BusId },
    #[error("epsilon {epsilon} must exceed 100 x mismatch tolerance {tolerance}")]
    EpsilonTooSmall { epsilon: f64, tolerance: f64 },
}

/// Controls how [`NetworkCase::scale_loads_with`] distributes a load change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalePolicy {
    /// Scale generator active setpoints along with the loads so total
    /// injection tracks demand; the slack absorbs the residual either way.
    pub scale_generation: bool,
}

impl Default for ScalePolicy {
    fn default() -> Self {
        Self {
            scale_generation: true,
        }
    }
}

/// Options for the epsilon-injection regularization of transit buses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizeOptions {
    /// Also inject epsilon as reactive power. Off by default.
    pub reactive: bool,
    /// Solver mismatch tolerance the injection must dominate.
    pub mismatch_tolerance: f64,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        Self {
            reactive: false,
            mismatch_tolerance: 1e-9,
        }
    }
}

impl NetworkCase {
    /// Internal index of a bus id.
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Slack voltage phasor: magnitude from its generator setpoint, angle 0.
    pub fn slack_voltage(&self) -> Complex64 {
        let slack = &self.buses[self.slack_index()];
        let v = self
            .generators
            .iter()
            .find(|g| g.bus == slack.id)
            .map(|g| g.v_set)
            .unwrap_or(1.0);
        Complex64::new(v, 0.0)
    }

    /// Sum of generator active setpoints at a bus, p.u.
    pub fn generation_at(&self, id: BusId) -> f64 {
        self.generators
            .iter()
            .filter(|g| g.bus == id)
            .map(|g| g.p_set)
            .sum()
    }

    /// PV-bus voltage setpoint (first generator at the bus).
    pub fn voltage_setpoint(&self, id: BusId) -> Option<f64> {
        self.generators.iter().find(|g| g.bus == id).map(|g| g.v_set)
    }

    /// Net complex power injection at a bus index: generation minus load.
    /// For PV buses only the real part is meaningful (Q is free).
    pub fn net_injection(&self, index: usize) -> Complex64 {
        let bus = &self.buses[index];
        Complex64::new(self.generation_at(bus.id), 0.0) - bus.load
    }

    /// All PQ buses with exactly zero net complex injection, ascending id.
    ///
    /// Detection is exact (the case-file value), not tolerance-based. Buses
    /// that carry only a shunt still count as transit: the shunt lives in the
    /// admittance matrix, not in the injection.
    pub fn detect_transit_buses(&self) -> Vec<BusId> {
        let mut out: Vec<BusId> = self
            .buses
            .iter()
            .enumerate()
            .filter(|(i, b)| b.kind == BusKind::Pq && self.net_injection(*i) == Complex64::ZERO)
            .map(|(_, b)| b.id)
            .collect();
        out.sort();
        out
    }

    /// Multiply every complex load by `lambda` under the default policy
    /// (generator active setpoints track the loads).
    pub fn scale_loads(&self, lambda: f64) -> NetworkCase {
        self.scale_loads_with(lambda, ScalePolicy::default())
    }

    pub fn scale_loads_with(&self, lambda: f64, policy: ScalePolicy) -> NetworkCase {
        assert!(lambda >= 0.0, "load scaling factor must be non-negative");
        let mut out = self.clone();
        for bus in &mut out.buses {
            bus.load *= lambda;
        }
        if policy.scale_generation {
            for gen in &mut out.generators {
                gen.p_set *= lambda;
            }
        }
        out
    }

    /// Add a small active-power injection `epsilon` at every transit bus so
    /// that no bus has exactly zero injection. The returned case has no
    /// transit buses.
    pub fn regularize_transit_buses(&self, epsilon: f64) -> Result<NetworkCase, CaseError> {
        self.regularize_transit_buses_with(epsilon, RegularizeOptions::default())
    }

    pub fn regularize_transit_buses_with(
        &self,
        epsilon: f64,
        opts: RegularizeOptions,
    ) -> Result<NetworkCase, CaseError> {
        // Two orders of magnitude above the mismatch tolerance, with an ulp
        // of slack so the exact 100x boundary passes.
        if !(epsilon >= 100.0 * opts.mismatch_tolerance * (1.0 - 1e-9)) {
            return Err(CaseError::EpsilonTooSmall {
                epsilon,
                tolerance: opts.mismatch_tolerance,
            });
        }
        let transit = self.detect_transit_buses();
        let mut out = self.clone();
        for id in transit {
            let idx = out.bus_index(id).expect("transit bus exists");
            // Injection is generation minus load, so a negative load term
            // adds epsilon of net injection.
            let inj = if opts.reactive {
                Complex64::new(epsilon, epsilon)
            } else {
                Complex64::new(epsilon, 0.0)
            };
            out.buses[idx].load -= inj;
        }
        Ok(out)
    }

    /// Canonical JSON form, used for round-trip tests and fingerprinting.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<NetworkCase, CaseError> {
        let case: NetworkCase = serde_json::from_str(text)
            .map_err(|e| CaseError::Validation(format!("bad case JSON: {e}")))?;
        case.validate()?;
        Ok(case)
    }

    /// Hash of the electrical data (name excluded), hex-encoded.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            base_mva: f64,
            buses: &'a [Bus],
            branches: &'a [Branch],
            generators: &'a [Generator],
        }
        let view = View {
            base_mva: self.base_mva,
            buses: &self.buses,
            branches: &self.branches,
            generators: &self.generators,
        };
        let bytes = serde_json::to_vec(&view).expect("case serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for b in digest {
            use fmt::Write;
            write!(out, "{b:02x}").unwrap();
        }
        out
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        if self.buses.is_empty() {
            return Err(CaseError::Validation("case has no buses".into()));
        }
        if !(self.base_mva > 0.0) {
            return Err(CaseError::Validation("base MVA must be positive".into()));
        }
        let mut ids: Vec<BusId> = self.buses.iter().map(|b| b.id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.buses.len() {
            return Err(CaseError::Validation("duplicate bus ids".into()));
        }
        let slack_count = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .count();
        if slack_count != 1 {
            return Err(CaseError::Validation(format!(
                "expected exactly one slack bus, found {slack_count}"
            )));
        }
        for bus in &self.buses {
            if !(bus.v_min < bus.v_max) {
                return Err(CaseError::Validation(format!(
                    "bus {}: voltage limits v_min {} >= v_max {}",
                    bus.id, bus.v_min, bus.v_max
                )));
            }
        }
        for br in &self.branches {
            for end in [br.from, br.to] {
                if self.bus_index(end).is_none() {
                    return Err(CaseError::Validation(format!(
                        "branch {}-{} references unknown bus {}",
                        br.from, br.to, end
                    )));
                }
            }
        }
        for gen in &self.generators {
            if self.bus_index(gen.bus).is_none() {
                return Err(CaseError::Validation(format!(
                    "generator references unknown bus {}",
                    gen.bus
                )));
            }
            if !(gen.q_min <= gen.q_max) {
                return Err(CaseError::Validation(format!(
                    "generator at bus {}: q_min {} > q_max {}",
                    gen.bus, gen.q_min, gen.q_max
                )));
            }
        }
        for bus in &self.buses {
            let gens: Vec<&Generator> =
                self.generators.iter().filter(|g| g.bus == bus.id).collect();
            match bus.kind {
                BusKind::Slack | BusKind::Pv => {
                    if gens.is_empty() {
                        return Err(CaseError::Validation(format!(
                            "{:?} bus {} has no generator",
                            bus.kind, bus.id
                        )));
                    }
                    if gens.windows(2).any(|w| w[0].v_set != w[1].v_set) {
                        return Err(CaseError::Validation(format!(
                            "generators at bus {} disagree on voltage setpoint",
                            bus.id
                        )));
                    }
                }
                BusKind::Pq => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn scale_identity() {
        let case = cases::three_bus_transit();
        assert_eq!(case.scale_loads(1.0), case);
    }

    #[test]
    fn scale_zero_makes_every_pq_bus_transit() {
        let case = cases::builtin("case14").unwrap();
        let scaled = case.scale_loads(0.0);
        let pq: Vec<BusId> = scaled
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Pq)
            .map(|b| b.id)
            .collect();
        assert_eq!(scaled.detect_transit_buses(), pq);
    }

    #[test]
    fn scale_composes() {
        let case = cases::builtin("case14").unwrap();
        let a = 0.3;
        let b = 1.7;
        let left = case.scale_loads(a).scale_loads(b);
        let right = case.scale_loads(a * b);
        for (x, y) in left.buses.iter().zip(&right.buses) {
            assert!((x.load - y.load).norm() < 1e-15);
        }
        for (x, y) in left.generators.iter().zip(&right.generators) {
            assert!((x.p_set - y.p_set).abs() < 1e-15);
        }
    }

    #[test]
    fn transit_detection_on_chain() {
        let case = cases::three_bus_chain();
        assert_eq!(case.detect_transit_buses(), vec![BusId(2)]);
    }

    #[test]
    fn no_transit_when_all_pq_loaded() {
        let case = cases::two_bus(Complex64::new(0.4, 0.15), Complex64::new(0.05, 0.25));
        assert!(case.detect_transit_buses().is_empty());
    }

    #[test]
    fn regularize_removes_transit_buses() {
        let case = cases::builtin("case30").unwrap();
        assert!(!case.detect_transit_buses().is_empty());
        let reg = case.regularize_transit_buses(1e-5).unwrap();
        assert!(reg.detect_transit_buses().is_empty());
    }

    #[test]
    fn regularize_is_noop_without_transit_buses() {
        let case = cases::two_bus(Complex64::new(0.4, 0.15), Complex64::new(0.05, 0.25));
        let reg = case.regularize_transit_buses(1e-5).unwrap();
        assert_eq!(reg, case);
    }

    #[test]
    fn regularize_rejects_epsilon_below_noise_floor() {
        let case = cases::three_bus_transit();
        let err = case.regularize_transit_buses_with(
            1e-10,
            RegularizeOptions {
                reactive: false,
                mismatch_tolerance: 1e-9,
            },
        );
        assert!(matches!(err, Err(CaseError::EpsilonTooSmall { .. })));
    }

    #[test]
    fn regularize_then_detect_is_empty_for_valid_epsilons() {
        let case = cases::builtin("case39").unwrap();
        for eps in [1e-7, 1e-5, 1e-3] {
            let reg = case.regularize_transit_buses(eps).unwrap();
            assert!(reg.detect_transit_buses().is_empty(), "eps {eps}");
        }
    }

    #[test]
    fn json_round_trip_is_identity() {
        for name in ["case14", "case30", "case39", "case57"] {
            let case = cases::builtin(name).unwrap();
            let json = case.to_canonical_json();
            let back = NetworkCase::from_json(&json).unwrap();
            assert_eq!(back, case, "{name}");
        }
    }

    #[test]
    fn fingerprint_ignores_name_but_not_data() {
        let a = cases::three_bus_transit();
        let mut renamed = a.clone();
        renamed.name = "other".into();
        assert_eq!(a.fingerprint(), renamed.fingerprint());

        let mut perturbed = a.clone();
        perturbed.buses[2].load += Complex64::new(1e-9, 0.0);
        assert_ne!(a.fingerprint(), perturbed.fingerprint());
    }
}
