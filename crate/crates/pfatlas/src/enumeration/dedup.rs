//! Deduplication and canonical ordering of solution lists.

use crate::power_flow::PowerFlowSolution;

/// Max-component complex voltage distance between two solutions.
pub fn solution_distance(a: &PowerFlowSolution, b: &PowerFlowSolution) -> f64 {
    a.voltages.max_component_distance(&b.voltages)
}

fn canonical_key(sol: &PowerFlowSolution) -> Vec<(i64, i64)> {
    sol.voltages
        .as_slice()
        .iter()
        .map(|v| (round_nano(v.re), round_nano(v.im)))
        .collect()
}

fn round_nano(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Lexicographic order on rectangular components rounded to 1e-9, so byte
/// output does not depend on discovery order.
pub fn canonical_sort(solutions: &mut [PowerFlowSolution]) {
    solutions.sort_by_cached_key(canonical_key);
}

/// Greedy clustering under `tol`, iterated to a fixed point so the result is
/// idempotent even for chained near-duplicates. The representative of a
/// cluster is its member with the smallest mismatch norm.
pub fn dedup(solutions: Vec<PowerFlowSolution>, tol: f64) -> Vec<PowerFlowSolution> {
    let mut members = solutions;
    loop {
        let mut reps: Vec<PowerFlowSolution> = Vec::new();
        let mut merged = false;
        for sol in members {
            match reps
                .iter_mut()
                .find(|rep| solution_distance(rep, &sol) <= tol)
            {
                Some(rep) => {
                    merged = true;
                    if sol.mismatch_norm < rep.mismatch_norm {
                        *rep = sol;
                    }
                }
                None => reps.push(sol),
            }
        }
        members = reps;
        if !merged {
            break;
        }
    }
    canonical_sort(&mut members);
    members
}
