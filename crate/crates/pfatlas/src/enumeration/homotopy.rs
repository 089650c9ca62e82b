//! Total-degree homotopy continuation for the complexified rectangular
//! power-balance system.
//!
//! Every balance equation is quadratic, so the start system `g_i(z) = z_i^2 -
//! r_i` (random nonzero `r_i`) has `2^m` trivially known roots and the convex
//! combination `H(z, t) = (1 - t) gamma g(z) + t F(z)` with a random complex
//! `gamma` is tracked from every start root. An endpoint is classified as
//! converged, diverged to infinity, or failed; the enumeration is exhaustive
//! (up to the probability-one gamma argument) exactly when no path fails.

use crate::power_flow::{PfModel, PfScalar};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-path predictor-corrector step controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub corrector_iterations: usize,
    /// Corrector acceptance on the scaled homotopy residual.
    pub corrector_tolerance: f64,
    /// A path whose iterate exceeds this norm is classified diverged.
    pub blowup_threshold: f64,
    /// Newton budget for polishing the endpoint on the target system.
    pub endgame_iterations: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            step_init: 0.05,
            step_min: 1e-9,
            step_max: 0.2,
            corrector_iterations: 3,
            corrector_tolerance: 1e-9,
            blowup_threshold: 1e6,
            endgame_iterations: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum PathOutcome {
    /// Endpoint of the complexified system, polished on the target.
    Converged(DVector<Complex64>),
    Diverged,
    Failed,
}

pub(crate) struct TotalDegreeHomotopy<'a> {
    model: &'a PfModel,
    /// Per-equation scaling applied to the target system; improves tracking
    /// conditioning without moving any root.
    scale: Vec<f64>,
    start_roots: Vec<Complex64>,
    gamma: Complex64,
    cfg: TrackerConfig,
}

fn cnorm_inf(v: &DVector<Complex64>) -> f64 {
    v.iter()
        .map(|z| (z.re * z.re + z.im * z.im).sqrt())
        .fold(0.0, f64::max)
}

impl<'a> TotalDegreeHomotopy<'a> {
    pub fn new(model: &'a PfModel, seed: u64, cfg: TrackerConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = model.dimension();
        let start_roots = (0..m)
            .map(|_| {
                let modulus = rng.gen_range(0.5..1.5);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(modulus, angle)
            })
            .collect();
        let gamma = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let scale = equation_scales(model);
        TotalDegreeHomotopy {
            model,
            scale,
            start_roots,
            gamma,
            cfg,
        }
    }

    pub fn path_count(&self) -> u128 {
        1u128 << self.model.dimension().min(127)
    }

    /// Start root for path index `k`: sign pattern over the bits of `k`.
    fn start_point(&self, k: u128) -> DVector<Complex64> {
        DVector::from_iterator(
            self.start_roots.len(),
            self.start_roots.iter().enumerate().map(|(i, r)| {
                let root = r.sqrt();
                if (k >> i) & 1 == 1 {
                    -root
                } else {
                    root
                }
            }),
        )
    }

    fn target(&self, z: &DVector<Complex64>) -> DVector<Complex64> {
        let r = self.model.stacked_residual(z.as_slice());
        DVector::from_iterator(
            r.len(),
            r.into_iter()
                .zip(&self.scale)
                .map(|(v, s)| v * Complex64::from_re(*s)),
        )
    }

    fn target_jacobian(&self, z: &DVector<Complex64>) -> DMatrix<Complex64> {
        let mut jac = self.model.stacked_jacobian(z.as_slice());
        for (row, s) in self.scale.iter().enumerate() {
            for col in 0..jac.ncols() {
                jac[(row, col)] *= *s;
            }
        }
        jac
    }

    fn start_system(&self, z: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(
            z.len(),
            z.iter()
                .zip(&self.start_roots)
                .map(|(zi, ri)| zi * zi - ri),
        )
    }

    fn homotopy(&self, z: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let g = self.start_system(z);
        let f = self.target(z);
        let t_c = Complex64::from_re(t);
        let omt = Complex64::from_re(1.0 - t);
        DVector::from_iterator(
            z.len(),
            g.iter()
                .zip(f.iter())
                .map(|(gi, fi)| omt * self.gamma * gi + t_c * fi),
        )
    }

    fn homotopy_jacobian(&self, z: &DVector<Complex64>, t: f64) -> DMatrix<Complex64> {
        let mut jac = self.target_jacobian(z);
        let t_c = Complex64::from_re(t);
        jac *= t_c;
        let omt_gamma = Complex64::from_re(1.0 - t) * self.gamma;
        for i in 0..z.len() {
            jac[(i, i)] += omt_gamma * Complex64::from_re(2.0) * z[i];
        }
        jac
    }

    /// dH/dt = F(z) - gamma g(z).
    fn homotopy_dt(&self, z: &DVector<Complex64>) -> DVector<Complex64> {
        let g = self.start_system(z);
        let f = self.target(z);
        DVector::from_iterator(
            z.len(),
            f.iter().zip(g.iter()).map(|(fi, gi)| fi - self.gamma * gi),
        )
    }

    /// Newton correction at fixed `t`; true on success.
    fn correct(&self, z: &mut DVector<Complex64>, t: f64) -> bool {
        for _ in 0..self.cfg.corrector_iterations {
            let h = self.homotopy(z, t);
            if cnorm_inf(&h) < self.cfg.corrector_tolerance {
                return true;
            }
            let jac = self.homotopy_jacobian(z, t);
            let Some(step) = jac.lu().solve(&h) else {
                return false;
            };
            *z -= step;
            if cnorm_inf(z) > self.cfg.blowup_threshold {
                return false;
            }
        }
        cnorm_inf(&self.homotopy(z, t)) < self.cfg.corrector_tolerance
    }

    pub fn track(&self, k: u128) -> PathOutcome {
        let mut z = self.start_point(k);
        let mut t = 0.0_f64;
        let mut h = self.cfg.step_init;
        while t < 1.0 {
            if cnorm_inf(&z) > self.cfg.blowup_threshold {
                return PathOutcome::Diverged;
            }
            let t_next = (t + h).min(1.0);
            // Euler predictor along dz/dt = -Hz^{-1} Ht.
            let jac = self.homotopy_jacobian(&z, t);
            let dt = self.homotopy_dt(&z);
            let mut z_next = match jac.lu().solve(&dt) {
                Some(v) => &z - v * Complex64::from_re(t_next - t),
                None => z.clone(),
            };
            if self.correct(&mut z_next, t_next) {
                z = z_next;
                t = t_next;
                h = (h * 1.5).min(self.cfg.step_max);
            } else {
                h *= 0.5;
                if h < self.cfg.step_min {
                    return if cnorm_inf(&z) > 1e3 {
                        PathOutcome::Diverged
                    } else {
                        PathOutcome::Failed
                    };
                }
            }
        }
        self.endgame(z)
    }

    /// Full Newton on the target system from the tracked endpoint.
    fn endgame(&self, mut z: DVector<Complex64>) -> PathOutcome {
        for _ in 0..self.cfg.endgame_iterations {
            let f = self.target(&z);
            if cnorm_inf(&f) < 1e-12 {
                return PathOutcome::Converged(z);
            }
            let jac = self.target_jacobian(&z);
            let Some(step) = jac.lu().solve(&f) else {
                return PathOutcome::Failed;
            };
            z -= step;
            if cnorm_inf(&z) > self.cfg.blowup_threshold {
                return PathOutcome::Diverged;
            }
        }
        if cnorm_inf(&self.target(&z)) < 1e-10 {
            PathOutcome::Converged(z)
        } else if cnorm_inf(&z) > 1e3 {
            PathOutcome::Diverged
        } else {
            PathOutcome::Failed
        }
    }
}

/// Per-equation scaling: divide each balance row by its dominant admittance
/// coefficient so rows with stiff branches do not swamp the tracker.
fn equation_scales(model: &PfModel) -> Vec<f64> {
    use crate::model::BusKind;
    let case = model.case();
    let y = model.admittance();
    let mut scale = vec![1.0; model.dimension()];
    let mut pair = 0usize;
    for (i, bus) in case.buses.iter().enumerate() {
        if i == model.slack_index() {
            continue;
        }
        let dominant = y
            .row(i)
            .iter()
            .map(|(_, v)| v.re.abs().max(v.im.abs()))
            .fold(1.0_f64, f64::max);
        scale[2 * pair] = 1.0 / dominant;
        scale[2 * pair + 1] = match bus.kind {
            BusKind::Pq => 1.0 / dominant,
            _ => 1.0,
        };
        pair += 1;
    }
    scale
}
