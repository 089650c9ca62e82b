//! Power-balance residuals, rectangular-coordinate Jacobians, and Newton
//! refinement.
//!
//! The working coordinates are rectangular components `(e_i, f_i)` of the
//! complex bus voltages. In these coordinates the balance equations are
//! quadratic polynomials, which is what the exhaustive homotopy enumerator
//! needs, and there is no angle to wrap near `|V| = 0` where short-circuit
//! solutions live.

mod scalar;

pub use scalar::PfScalar;

use crate::model::{AdmittanceMatrix, BusId, BusKind, CaseError, NetworkCase};
use crate::short_circuit::ClassificationLabel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-bus complex voltages, one entry per bus in case order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageVector(Vec<Complex64>);

impl VoltageVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        VoltageVector(values)
    }

    /// Flat start: slack and PV buses at their setpoints, PQ buses at 1+0j.
    pub fn flat_start(case: &NetworkCase) -> Self {
        let v = case
            .buses
            .iter()
            .map(|b| match b.kind {
                BusKind::Slack => case.slack_voltage(),
                BusKind::Pv => Complex64::new(
                    case.voltage_setpoint(b.id).expect("PV bus has generator"),
                    0.0,
                ),
                BusKind::Pq => Complex64::new(1.0, 0.0),
            })
            .collect();
        VoltageVector(v)
    }

    /// Flat start with bus `index` forced to zero volts.
    pub fn grounded_start(case: &NetworkCase, index: usize) -> Self {
        let mut v = Self::flat_start(case);
        v.0[index] = Complex64::ZERO;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Complex64 {
        self.0[index]
    }

    pub fn magnitude(&self, index: usize) -> f64 {
        cmod(self.0[index].re, self.0[index].im)
    }

    pub fn min_magnitude(&self) -> f64 {
        (0..self.len())
            .map(|i| self.magnitude(i))
            .fold(f64::INFINITY, f64::min)
    }

    /// Component-wise conjugate.
    pub fn conjugate(&self) -> Self {
        VoltageVector(self.0.iter().map(|v| v.conj()).collect())
    }

    /// Greatest per-bus distance `max_i |a_i - b_i|` to another vector.
    pub fn max_component_distance(&self, other: &VoltageVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| cmod(a.re - b.re, a.im - b.im))
            .fold(0.0, f64::max)
    }
}

impl Serialize for VoltageVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(f64, f64)> = self.0.iter().map(|v| (v.re, v.im)).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VoltageVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(f64, f64)>::deserialize(deserializer)?;
        Ok(VoltageVector(
            pairs
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        ))
    }
}

/// Complex modulus without libm's `hypot`, so results are reproducible
/// bit-for-bit across platforms.
pub(crate) fn cmod(re: f64, im: f64) -> f64 {
    (re * re + im * im).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Accepted infinity-norm of the per-bus complex residual, p.u.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Max-component complex voltage distance under which two solutions are
    /// considered the same root.
    pub dedup_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 50,
            dedup_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), PowerFlowError> {
        if !(self.tolerance > 0.0) {
            return Err(PowerFlowError::BadConfig(
                "mismatch tolerance must be positive".into(),
            ));
        }
        // Voltage error at an accepted solution is on the order of the
        // mismatch tolerance; dedup must sit well above that noise floor.
        if !(self.dedup_tolerance >= 100.0 * self.tolerance) {
            return Err(PowerFlowError::BadConfig(format!(
                "dedup tolerance {} must be at least 100 x mismatch tolerance {}",
                self.dedup_tolerance, self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(PowerFlowError::BadConfig(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted solution of the power-balance equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub voltages: VoltageVector,
    /// Infinity-norm of the per-bus complex residual, p.u.
    pub mismatch_norm: f64,
    /// Computed reactive output per generator bus (slack included), p.u.
    pub gen_reactive: Vec<(BusId, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<ClassificationLabel>,
}

impl PowerFlowSolution {
    pub fn reactive_at(&self, bus: BusId) -> Option<f64> {
        self.gen_reactive
            .iter()
            .find(|(b, _)| *b == bus)
            .map(|(_, q)| *q)
    }
}

#[derive(Debug, Error)]
pub enum PowerFlowError {
    #[error("voltage vector has {got} entries, case has {want} buses")]
    DimensionMismatch { got: usize, want: usize },
    #[error("invalid solver config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceReason {
    IterationCap,
    SingularJacobian,
    StepBlowup,
}

/// Newton failed to produce an accepted solution. Carried as data, never
/// silently dropped: the sweep driver aggregates divergence rates.
#[derive(Debug, Clone, Error)]
#[error("diverged after {iterations} iterations ({reason:?}), final mismatch {final_mismatch:e}")]
pub struct Divergence {
    pub reason: DivergenceReason,
    pub iterations: usize,
    pub final_mismatch: f64,
}

/// A [`NetworkCase`] compiled for numeric work: admittance matrix, injection
/// vector, and the packing of non-slack `(e, f)` pairs into one real vector.
///
/// Immutable after construction; all evaluation methods are pure, so callers
/// may fan residuals, Jacobians, and refinements out across parallel workers.
#[derive(Debug, Clone)]
pub struct PfModel {
    case: NetworkCase,
    y: AdmittanceMatrix,
    slack: usize,
    slack_v: Complex64,
    /// Net scheduled injection per bus; imaginary part meaningless for PV.
    injection: Vec<Complex64>,
    /// Squared voltage setpoint per PV bus, 0 elsewhere.
    vset2: Vec<f64>,
    /// Bus index -> unknown-pair slot (None for slack).
    pair_of_bus: Vec<Option<usize>>,
    /// Unknown-pair slot -> bus index.
    bus_of_pair: Vec<usize>,
    /// Bus indices that host at least one generator, ascending.
    gen_buses: Vec<usize>,
}

impl PfModel {
    pub fn new(case: &NetworkCase) -> Result<Self, CaseError> {
        case.validate()?;
        let y = AdmittanceMatrix::build(case)?;
        for (i, bus) in case.buses.iter().enumerate() {
            if y.row(i).iter().all(|(_, v)| *v == Complex64::ZERO) {
                return Err(CaseError::Validation(format!(
                    "bus {} is electrically isolated",
                    bus.id
                )));
            }
        }
        let slack = case.slack_index();
        let mut pair_of_bus = vec![None; case.buses.len()];
        let mut bus_of_pair = Vec::with_capacity(case.buses.len() - 1);
        for i in 0..case.buses.len() {
            if i != slack {
                pair_of_bus[i] = Some(bus_of_pair.len());
                bus_of_pair.push(i);
            }
        }
        let injection = (0..case.buses.len())
            .map(|i| case.net_injection(i))
            .collect();
        let vset2 = case
            .buses
            .iter()
            .map(|b| match b.kind {
                BusKind::Pv => {
                    let v = case.voltage_setpoint(b.id).expect("PV bus has generator");
                    v * v
                }
                _ => 0.0,
            })
            .collect();
        let mut gen_buses: Vec<usize> = case
            .generators
            .iter()
            .map(|g| case.bus_index(g.bus).expect("validated generator bus"))
            .collect();
        gen_buses.sort_unstable();
        gen_buses.dedup();
        Ok(PfModel {
            case: case.clone(),
            y,
            slack,
            slack_v: case.slack_voltage(),
            injection,
            vset2,
            pair_of_bus,
            bus_of_pair,
            gen_buses,
        })
    }

    pub fn case(&self) -> &NetworkCase {
        &self.case
    }

    pub fn admittance(&self) -> &AdmittanceMatrix {
        &self.y
    }

    pub fn bus_count(&self) -> usize {
        self.case.buses.len()
    }

    /// Number of real unknowns, `2 * (bus_count - 1)`.
    pub fn dimension(&self) -> usize {
        2 * self.bus_of_pair.len()
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    pub fn slack_voltage(&self) -> Complex64 {
        self.slack_v
    }

    /// Pack the non-slack voltages of `v` into the real unknown vector.
    pub fn pack(&self, v: &VoltageVector) -> DVector<f64> {
        let mut x = DVector::zeros(self.dimension());
        for (k, &bus) in self.bus_of_pair.iter().enumerate() {
            x[2 * k] = v.get(bus).re;
            x[2 * k + 1] = v.get(bus).im;
        }
        x
    }

    /// Expand an unknown vector into a full voltage vector (slack entry from
    /// the case setpoint).
    pub fn unpack(&self, x: &[f64]) -> VoltageVector {
        let mut v = vec![Complex64::ZERO; self.bus_count()];
        v[self.slack] = self.slack_v;
        for (k, &bus) in self.bus_of_pair.iter().enumerate() {
            v[bus] = Complex64::new(x[2 * k], x[2 * k + 1]);
        }
        VoltageVector(v)
    }

    /// Per-bus complex residual of the power-balance equations.
    ///
    /// PQ bus: `V_i * conj(I_i) - S_i`. PV bus: real part is the active
    /// mismatch, imaginary slot carries `|V_i|^2 - V_set^2`. Slack: zero by
    /// convention.
    pub fn residual(&self, v: &VoltageVector) -> Result<Vec<Complex64>, PowerFlowError> {
        if v.len() != self.bus_count() {
            return Err(PowerFlowError::DimensionMismatch {
                got: v.len(),
                want: self.bus_count(),
            });
        }
        let out = (0..self.bus_count())
            .map(|i| {
                if i == self.slack {
                    return Complex64::ZERO;
                }
                let vi = v.get(i);
                let current = self.y.current(i, v.as_slice());
                let s = vi * current.conj();
                match self.case.buses[i].kind {
                    BusKind::Pq => s - self.injection[i],
                    BusKind::Pv => Complex64::new(
                        s.re - self.injection[i].re,
                        vi.norm_sqr() - self.vset2[i],
                    ),
                    BusKind::Slack => unreachable!(),
                }
            })
            .collect();
        Ok(out)
    }

    /// Infinity-norm of the per-bus complex residual.
    pub fn mismatch_norm(&self, v: &VoltageVector) -> Result<f64, PowerFlowError> {
        Ok(self
            .residual(v)?
            .iter()
            .map(|r| cmod(r.re, r.im))
            .fold(0.0, f64::max))
    }

    /// Stacked real residual over the packed unknowns, generic in the scalar
    /// so the same polynomials serve Newton (`f64`) and the complexified
    /// homotopy (`Complex64`). Layout: `[P_k, Q_k or Vmag_k]` per pair `k`.
    pub fn stacked_residual<T: PfScalar>(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.dimension());
        let mut out = vec![T::zero(); self.dimension()];
        for (k, &bus) in self.bus_of_pair.iter().enumerate() {
            let (ei, fi) = (x[2 * k], x[2 * k + 1]);
            let (a, b) = self.injected_current(x, bus);
            let inj = self.injection[bus];
            out[2 * k] = ei * a + fi * b - T::from_re(inj.re);
            out[2 * k + 1] = match self.case.buses[bus].kind {
                BusKind::Pq => fi * a - ei * b - T::from_re(inj.im),
                BusKind::Pv => ei * ei + fi * fi - T::from_re(self.vset2[bus]),
                BusKind::Slack => unreachable!(),
            };
        }
        out
    }

    /// Real and imaginary parts of the nodal current at `bus` over packed
    /// unknowns.
    fn injected_current<T: PfScalar>(&self, x: &[T], bus: usize) -> (T, T) {
        let mut a = T::zero();
        let mut b = T::zero();
        for &(j, y) in self.y.row(bus) {
            let (g, bb) = (y.re, y.im);
            let (ej, fj) = match self.pair_of_bus[j] {
                Some(l) => (x[2 * l], x[2 * l + 1]),
                None => (T::from_re(self.slack_v.re), T::from_re(self.slack_v.im)),
            };
            a = a + T::from_re(g) * ej - T::from_re(bb) * fj;
            b = b + T::from_re(g) * fj + T::from_re(bb) * ej;
        }
        (a, b)
    }

    /// Dense Jacobian of [`Self::stacked_residual`] with respect to the
    /// packed unknowns; square of side `2 * (bus_count - 1)`.
    pub fn stacked_jacobian<T: PfScalar>(&self, x: &[T]) -> DMatrix<T> {
        debug_assert_eq!(x.len(), self.dimension());
        let m = self.dimension();
        let mut jac = DMatrix::from_element(m, m, T::zero());
        for (k, &bus) in self.bus_of_pair.iter().enumerate() {
            let (ei, fi) = (x[2 * k], x[2 * k + 1]);
            let (a, b) = self.injected_current(x, bus);
            let kind = self.case.buses[bus].kind;
            for &(j, y) in self.y.row(bus) {
                let Some(l) = self.pair_of_bus[j] else {
                    continue;
                };
                let g = T::from_re(y.re);
                let bb = T::from_re(y.im);
                jac[(2 * k, 2 * l)] = jac[(2 * k, 2 * l)] + ei * g + fi * bb;
                jac[(2 * k, 2 * l + 1)] = jac[(2 * k, 2 * l + 1)] - ei * bb + fi * g;
                if kind == BusKind::Pq {
                    jac[(2 * k + 1, 2 * l)] = jac[(2 * k + 1, 2 * l)] + fi * g - ei * bb;
                    jac[(2 * k + 1, 2 * l + 1)] = jac[(2 * k + 1, 2 * l + 1)] - fi * bb - ei * g;
                }
            }
            jac[(2 * k, 2 * k)] = jac[(2 * k, 2 * k)] + a;
            jac[(2 * k, 2 * k + 1)] = jac[(2 * k, 2 * k + 1)] + b;
            match kind {
                BusKind::Pq => {
                    jac[(2 * k + 1, 2 * k)] = jac[(2 * k + 1, 2 * k)] - b;
                    jac[(2 * k + 1, 2 * k + 1)] = jac[(2 * k + 1, 2 * k + 1)] + a;
                }
                BusKind::Pv => {
                    let two = T::from_re(2.0);
                    jac[(2 * k + 1, 2 * k)] = two * ei;
                    jac[(2 * k + 1, 2 * k + 1)] = two * fi;
                }
                BusKind::Slack => unreachable!(),
            }
        }
        jac
    }

    /// Infinity-norm of a stacked residual, taking each `(P, Q)` pair as one
    /// complex entry so it agrees with [`Self::mismatch_norm`].
    pub fn stacked_norm(&self, r: &[f64]) -> f64 {
        r.chunks_exact(2)
            .map(|p| cmod(p[0], p[1]))
            .fold(0.0, f64::max)
    }

    /// Newton iteration from `v0` to an accepted solution, or a structured
    /// divergence report. Idempotent on accepted solutions: a start already
    /// inside tolerance is returned unchanged.
    pub fn newton_refine(
        &self,
        v0: &VoltageVector,
        cfg: &SolverConfig,
    ) -> Result<PowerFlowSolution, Divergence> {
        let mut x = self.pack(v0);
        let mut last_mismatch = f64::INFINITY;
        for iter in 0..=cfg.max_iterations {
            let r = self.stacked_residual(x.as_slice());
            last_mismatch = self.stacked_norm(&r);
            if last_mismatch < cfg.tolerance {
                return Ok(self.solution_from(x.as_slice(), last_mismatch));
            }
            if iter == cfg.max_iterations {
                break;
            }
            let jac = self.stacked_jacobian(x.as_slice());
            let rhs = DVector::from_vec(r);
            let Some(step) = jac.lu().solve(&rhs) else {
                return Err(Divergence {
                    reason: DivergenceReason::SingularJacobian,
                    iterations: iter,
                    final_mismatch: last_mismatch,
                });
            };
            x -= step;
            if x.amax() > 1e6 {
                return Err(Divergence {
                    reason: DivergenceReason::StepBlowup,
                    iterations: iter + 1,
                    final_mismatch: last_mismatch,
                });
            }
        }
        Err(Divergence {
            reason: DivergenceReason::IterationCap,
            iterations: cfg.max_iterations,
            final_mismatch: last_mismatch,
        })
    }

    fn solution_from(&self, x: &[f64], mismatch: f64) -> PowerFlowSolution {
        let voltages = self.unpack(x);
        let gen_reactive = self.generator_reactive(&voltages);
        PowerFlowSolution {
            voltages,
            mismatch_norm: mismatch,
            gen_reactive,
            label: None,
        }
    }

    /// Build a solution record from a voltage vector, recomputing the
    /// mismatch from scratch.
    pub fn solution_from_voltages(&self, v: &VoltageVector) -> PowerFlowSolution {
        let mismatch = self.mismatch_norm(v).expect("dimension checked by caller");
        let mut sol = self.solution_from(&self.pack(v).as_slice().to_vec(), mismatch);
        sol.mismatch_norm = mismatch;
        sol
    }

    /// Reactive power produced at each generator bus: the imaginary part of
    /// `V_i * conj((Y V)_i)` plus the local reactive demand. Shared verbatim
    /// by the limit filter and the V-Q surface export.
    pub fn generator_reactive(&self, v: &VoltageVector) -> Vec<(BusId, f64)> {
        self.gen_buses
            .iter()
            .map(|&i| {
                let s = v.get(i) * self.y.current(i, v.as_slice()).conj();
                (self.case.buses[i].id, s.im + self.case.buses[i].load.im)
            })
            .collect()
    }

    /// Nodal current magnitude at a bus.
    pub fn current_magnitude(&self, v: &VoltageVector, bus: usize) -> f64 {
        let i = self.y.current(bus, v.as_slice());
        cmod(i.re, i.im)
    }
}

/// Convenience wrappers matching the operation-level API.
pub fn residual(case: &NetworkCase, v: &VoltageVector) -> Result<Vec<Complex64>, CaseError> {
    let model = PfModel::new(case)?;
    model
        .residual(v)
        .map_err(|e| CaseError::Validation(e.to_string()))
}

pub fn jacobian(case: &NetworkCase, v: &VoltageVector) -> Result<DMatrix<f64>, CaseError> {
    let model = PfModel::new(case)?;
    if v.len() != model.bus_count() {
        return Err(CaseError::Validation(
            PowerFlowError::DimensionMismatch {
                got: v.len(),
                want: model.bus_count(),
            }
            .to_string(),
        ));
    }
    let x = model.pack(v);
    Ok(model.stacked_jacobian(x.as_slice()))
}

pub fn newton_refine(
    case: &NetworkCase,
    v0: &VoltageVector,
    cfg: &SolverConfig,
) -> Result<Result<PowerFlowSolution, Divergence>, CaseError> {
    let model = PfModel::new(case)?;
    Ok(model.newton_refine(v0, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn residual_is_zero_at_flat_start_with_no_injections() {
        let case = cases::two_bus(Complex64::ZERO, Complex64::new(0.0, 0.1));
        let model = PfModel::new(&case).unwrap();
        let r = model.residual(&VoltageVector::flat_start(&case)).unwrap();
        for entry in r {
            assert_abs_diff_eq!(entry.re, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(entry.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn residual_at_flat_start_equals_minus_injection() {
        // No current flows at a flat start on a shunt-free network, so the
        // residual reduces to -S_i, i.e. +load at the loaded bus.
        let load = Complex64::new(1.0, 0.5);
        let case = cases::two_bus(load, Complex64::new(0.0, 0.1));
        let model = PfModel::new(&case).unwrap();
        let r = model.residual(&VoltageVector::flat_start(&case)).unwrap();
        assert_abs_diff_eq!(r[1].re, load.re, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1].im, load.im, epsilon = 1e-15);
        assert_eq!(r[0], Complex64::ZERO);
    }

    #[test]
    fn residual_rejects_wrong_dimension() {
        let case = cases::three_bus_chain();
        let model = PfModel::new(&case).unwrap();
        let v = VoltageVector::new(vec![Complex64::new(1.0, 0.0); 2]);
        assert!(matches!(
            model.residual(&v),
            Err(PowerFlowError::DimensionMismatch { got: 2, want: 3 })
        ));
    }

    #[test]
    fn stacked_residual_agrees_with_complex_residual() {
        let case = cases::three_bus_pv();
        let model = PfModel::new(&case).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x: Vec<f64> = (0..model.dimension())
                .map(|_| rng.gen_range(-1.5..1.5))
                .collect();
            let v = model.unpack(&x);
            let complex = model.residual(&v).unwrap();
            let stacked = model.stacked_residual(&x);
            for (k, &bus) in model.bus_of_pair.iter().enumerate() {
                assert_abs_diff_eq!(stacked[2 * k], complex[bus].re, epsilon = 1e-12);
                assert_abs_diff_eq!(stacked[2 * k + 1], complex[bus].im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_central_differences_on_three_bus() {
        let case = cases::three_bus_pv();
        let model = PfModel::new(&case).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-7;
        for _ in 0..100 {
            let x: Vec<f64> = (0..model.dimension())
                .map(|_| rng.gen_range(-1.5..1.5))
                .collect();
            let jac = model.stacked_jacobian(&x);
            for col in 0..model.dimension() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[col] += h;
                xm[col] -= h;
                let rp = model.stacked_residual(&xp);
                let rm = model.stacked_residual(&xm);
                for row in 0..model.dimension() {
                    let fd = (rp[row] - rm[row]) / (2.0 * h);
                    assert!(
                        (jac[(row, col)] - fd).abs() < 1e-6,
                        "J[{row},{col}] = {} vs fd {fd}",
                        jac[(row, col)]
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_at_flat_start_of_lossless_pair_is_the_hand_expansion() {
        // Zero injections, z = 0.1j: quadratic terms vanish at the flat
        // start and the map reduces to [[0, 10], [10, 0]].
        let case = cases::two_bus(Complex64::ZERO, Complex64::new(0.0, 0.1));
        let model = PfModel::new(&case).unwrap();
        let x = model.pack(&VoltageVector::flat_start(&case));
        let jac = model.stacked_jacobian(x.as_slice());
        assert_abs_diff_eq!(jac[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jac[(0, 1)], 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jac[(1, 0)], 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jac[(1, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn newton_is_idempotent_at_a_solution() {
        let case = cases::builtin("case14").unwrap();
        let model = PfModel::new(&case).unwrap();
        let cfg = SolverConfig::default();
        let first = model
            .newton_refine(&VoltageVector::flat_start(&case), &cfg)
            .expect("base case converges from flat start");
        assert!(first.mismatch_norm < 1e-9);
        let again = model.newton_refine(&first.voltages, &cfg).unwrap();
        assert_eq!(
            again.voltages.max_component_distance(&first.voltages),
            0.0,
            "accepted solutions are returned unchanged"
        );
    }

    #[test]
    fn newton_diverges_from_all_grounded_start() {
        // Grounding every non-slack bus zeroes the rows of buses that do not
        // neighbor the slack.
        let case = cases::three_bus_chain();
        let model = PfModel::new(&case).unwrap();
        let mut v = VoltageVector::flat_start(&case);
        for i in 1..3 {
            v.0[i] = Complex64::ZERO;
        }
        let err = model
            .newton_refine(&v, &SolverConfig::default())
            .unwrap_err();
        assert_eq!(err.reason, DivergenceReason::SingularJacobian);
    }

    #[test]
    fn pv_magnitudes_hold_at_converged_solutions() {
        let case = cases::builtin("case14").unwrap();
        let model = PfModel::new(&case).unwrap();
        let sol = model
            .newton_refine(&VoltageVector::flat_start(&case), &SolverConfig::default())
            .unwrap();
        for (i, bus) in case.buses.iter().enumerate() {
            if bus.kind == BusKind::Pv {
                let vset = case.voltage_setpoint(bus.id).unwrap();
                assert!((sol.voltages.magnitude(i) - vset).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn config_validation_rejects_tight_dedup() {
        let bad = SolverConfig {
            tolerance: 1e-9,
            max_iterations: 50,
            dedup_tolerance: 1e-8,
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
