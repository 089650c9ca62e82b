//! Heuristic multi-start enumeration with deflation of already-found roots.
//!
//! Starts are structured seeds (flat, per-bus grounded) plus seeded random
//! points, refined by Newton on the deflated system `G = eta F` where
//! `eta(x) = prod_k (1/|x - x_k|^2 + 1)` over the known roots. The deflated
//! Newton step is the plain step rescaled by `1 / (1 - grad_eta . d0 / eta)`,
//! which repels iterates from roots already in the basket.
//!
//! Random starts are consumed in fixed-size batches: seeds are drawn
//! sequentially, each batch is refined in parallel against a snapshot of the
//! known roots, and new roots merge in seed order. Output is therefore
//! identical for any worker count.

use super::EnumConfig;
use crate::power_flow::{Divergence, DivergenceReason, PfModel, PowerFlowSolution, VoltageVector};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BATCH: usize = 128;

#[derive(Debug, Default, Clone)]
pub(crate) struct MultiStartStats {
    pub starts_used: usize,
    pub divergences: usize,
    pub saturated: bool,
}

pub(crate) fn run(model: &PfModel, cfg: &EnumConfig) -> (Vec<PowerFlowSolution>, MultiStartStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut roots: Vec<DVector<f64>> = Vec::new();
    let mut solutions: Vec<PowerFlowSolution> = Vec::new();
    let mut stats = MultiStartStats::default();

    let mut structured: Vec<DVector<f64>> = Vec::new();
    if cfg.include_flat_seed {
        structured.push(model.pack(&VoltageVector::flat_start(model.case())));
    }
    if cfg.include_grounded_seeds {
        // Short-circuit roots live near per-bus grounded points.
        for bus in 0..model.bus_count() {
            if bus != model.slack_index() {
                structured.push(model.pack(&VoltageVector::grounded_start(model.case(), bus)));
            }
        }
    }
    refine_batch(model, cfg, &structured, &mut roots, &mut solutions, &mut stats);

    let mut since_new = 0usize;
    let mut remaining = cfg.multistart_samples;
    while remaining > 0 && since_new < cfg.saturation_window {
        let batch_size = remaining.min(BATCH);
        remaining -= batch_size;
        let batch: Vec<DVector<f64>> = (0..batch_size)
            .map(|_| {
                DVector::from_iterator(
                    model.dimension(),
                    (0..model.dimension())
                        .map(|_| rng.gen_range(-cfg.sample_box..cfg.sample_box)),
                )
            })
            .collect();
        let before = roots.len();
        refine_batch(model, cfg, &batch, &mut roots, &mut solutions, &mut stats);
        if roots.len() > before {
            since_new = 0;
        } else {
            since_new += batch_size;
        }
    }
    stats.saturated = since_new >= cfg.saturation_window;
    (solutions, stats)
}

fn refine_batch(
    model: &PfModel,
    cfg: &EnumConfig,
    starts: &[DVector<f64>],
    roots: &mut Vec<DVector<f64>>,
    solutions: &mut Vec<PowerFlowSolution>,
    stats: &mut MultiStartStats,
) {
    if starts.is_empty() {
        return;
    }
    stats.starts_used += starts.len();
    let snapshot: Vec<DVector<f64>> = roots.clone();
    let outcomes = crate::par::map_ordered(starts, |x0| {
        deflated_refine(model, x0.clone(), &snapshot, cfg)
    });
    for outcome in outcomes {
        match outcome {
            Ok((x, sol)) => {
                let is_new = roots
                    .iter()
                    .all(|known| max_abs_diff(&x, known) > cfg.solver.dedup_tolerance);
                if is_new {
                    roots.push(x);
                    solutions.push(sol);
                }
            }
            Err(_) => stats.divergences += 1,
        }
    }
}

fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Newton with deflation against `known` roots. Converges only to roots of
/// the undeflated system that are not in `known` (up to the dedup tolerance).
fn deflated_refine(
    model: &PfModel,
    mut x: DVector<f64>,
    known: &[DVector<f64>],
    cfg: &EnumConfig,
) -> Result<(DVector<f64>, PowerFlowSolution), Divergence> {
    let scfg = &cfg.solver;
    let mut last_mismatch = f64::INFINITY;
    for iter in 0..=scfg.max_iterations {
        let r = model.stacked_residual(x.as_slice());
        last_mismatch = model.stacked_norm(&r);
        if last_mismatch < scfg.tolerance {
            let near_known = known
                .iter()
                .any(|k| max_abs_diff(&x, k) <= scfg.dedup_tolerance);
            if near_known {
                // Landed back on a deflated root; report as non-productive.
                return Err(Divergence {
                    reason: DivergenceReason::IterationCap,
                    iterations: iter,
                    final_mismatch: last_mismatch,
                });
            }
            let v = model.unpack(x.as_slice());
            let sol = model.solution_from_voltages(&v);
            return Ok((x, sol));
        }
        if iter == scfg.max_iterations {
            break;
        }
        let jac = model.stacked_jacobian(x.as_slice());
        let rhs = DVector::from_vec(r);
        let Some(d0) = jac.lu().solve(&rhs) else {
            return Err(Divergence {
                reason: DivergenceReason::SingularJacobian,
                iterations: iter,
                final_mismatch: last_mismatch,
            });
        };
        let d0 = -d0;

        // Deflation rescaling: alpha = 1 / (1 - (grad eta . d0) / eta) with
        // eta = prod (1/r^2 + 1); each factor contributes
        // (-2 (x - x_k) . d0 / r^4) / (1/r^2 + 1).
        let mut s = 0.0;
        let mut stuck_on_known = false;
        for k in known {
            let diff = &x - k;
            let r2 = diff.norm_squared();
            if r2 < 1e-24 {
                stuck_on_known = true;
                break;
            }
            s += (-2.0 * diff.dot(&d0) / (r2 * r2)) / (1.0 / r2 + 1.0);
        }
        if stuck_on_known {
            return Err(Divergence {
                reason: DivergenceReason::IterationCap,
                iterations: iter,
                final_mismatch: last_mismatch,
            });
        }
        let denom = 1.0 - s;
        let alpha = if denom.abs() < 1e-12 {
            1.0
        } else {
            1.0 / denom
        };
        let mut step = d0 * alpha;
        let len = step.amax();
        if len > 2.0 {
            step *= 2.0 / len;
        }
        x += step;
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
        iterations: scfg.max_iterations,
        final_mismatch: last_mismatch,
    })
}
