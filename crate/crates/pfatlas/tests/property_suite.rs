//! Property tests over randomized inputs.

mod common;

use num_complex::Complex64;
use pfatlas::analytics::{magnitude_histogram, HistogramScope};
use pfatlas::cases;
use pfatlas::enumeration::{
    dedup, solution_distance, Completeness, EnumDiagnostics, EnumMethod, SolutionSet,
};
use pfatlas::model::BusId;
use pfatlas::power_flow::{PowerFlowSolution, SolverConfig, VoltageVector};
use proptest::prelude::*;

fn synthetic_solution(parts: Vec<(f64, f64)>) -> PowerFlowSolution {
    PowerFlowSolution {
        voltages: VoltageVector::new(
            parts
                .into_iter()
                .map(|(e, f)| Complex64::new(e, f))
                .collect(),
        ),
        mismatch_norm: 0.0,
        gen_reactive: vec![(BusId(1), 0.0)],
        label: None,
    }
}

fn synthetic_set(solutions: Vec<PowerFlowSolution>) -> SolutionSet {
    SolutionSet {
        fingerprint: "synthetic".into(),
        lambda: 1.0,
        regularized_epsilon: None,
        method: EnumMethod::Imported,
        complete: Completeness::Heuristic,
        solver: SolverConfig::default(),
        diagnostics: EnumDiagnostics::default(),
        solutions,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Histogram conservation: in-range plus out-of-range counts equal
    /// |set| x buses-in-scope, for any voltages.
    #[test]
    fn histogram_conserves_mass(
        sols in prop::collection::vec(
            prop::collection::vec((-0.2f64..1.6, -1.4f64..1.4), 4),
            1..40,
        )
    ) {
        let case = cases::three_bus_transit();
        // Synthetic 3-bus voltages: drop the 4th pair, keep 3.
        let solutions: Vec<PowerFlowSolution> = sols
            .iter()
            .map(|parts| synthetic_solution(parts[..3].to_vec()))
            .collect();
        let count = solutions.len();
        let set = synthetic_set(solutions);

        let all = magnitude_histogram(&set, &case, HistogramScope::All).unwrap();
        prop_assert_eq!(all.counts.len(), 100);
        prop_assert_eq!(all.in_range_total() + all.out_of_range, count * 3);

        let one = magnitude_histogram(&set, &case, HistogramScope::Bus(BusId(2))).unwrap();
        prop_assert_eq!(one.in_range_total() + one.out_of_range, count);
    }
}

proptest! {
    /// Dedup is idempotent and leaves survivors pairwise separated, even for
    /// chained near-duplicate clusters.
    #[test]
    fn dedup_idempotent_and_separated(
        centers in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
        jitters in prop::collection::vec((0usize..6, -2.0f64..2.0), 0..20),
    ) {
        let tol = 1e-3;
        let mut sols: Vec<PowerFlowSolution> = Vec::new();
        for &(e, f) in &centers {
            sols.push(synthetic_solution(vec![(1.0, 0.0), (e, f), (e * 0.5, f * 0.5)]));
        }
        // Perturb copies of existing centers by up to 2 tolerances, which
        // exercises merge chains across clusters.
        for &(which, scale) in &jitters {
            let base = centers[which % centers.len()];
            let (e, f) = (base.0 + scale * tol, base.1 - scale * tol * 0.5);
            sols.push(synthetic_solution(vec![(1.0, 0.0), (e, f), (e * 0.5, f * 0.5)]));
        }

        let once = dedup(sols, tol);
        let twice = dedup(once.clone(), tol);
        prop_assert_eq!(&once, &twice);
        for i in 0..once.len() {
            for j in (i + 1)..once.len() {
                prop_assert!(solution_distance(&once[i], &once[j]) > tol);
            }
        }
    }

    /// Load scaling composes multiplicatively field by field.
    #[test]
    fn scaling_composes(a in 0.0f64..2.5, b in 0.0f64..2.5) {
        let case = cases::builtin("case30").unwrap();
        let left = case.scale_loads(a).scale_loads(b);
        let right = case.scale_loads(a * b);
        for (x, y) in left.buses.iter().zip(&right.buses) {
            prop_assert!((x.load - y.load).norm() <= 1e-14 * (1.0 + y.load.norm()));
        }
        for (x, y) in left.generators.iter().zip(&right.generators) {
            prop_assert!((x.p_set - y.p_set).abs() <= 1e-14 * (1.0 + y.p_set.abs()));
        }
    }

    /// Transit buses stay transit under any scaling; regularization then
    /// clears them for any valid epsilon.
    #[test]
    fn transit_buses_survive_scaling_and_die_under_regularization(
        lambda in 0.0f64..3.0,
        eps_exp in -6.0f64..-3.0,
    ) {
        let case = cases::builtin("case39").unwrap();
        let scaled = case.scale_loads(lambda);
        prop_assert_eq!(scaled.detect_transit_buses(), case.detect_transit_buses());
        let eps = 10f64.powf(eps_exp);
        let reg = scaled.regularize_transit_buses(eps).unwrap();
        prop_assert!(reg.detect_transit_buses().is_empty());
    }
}
