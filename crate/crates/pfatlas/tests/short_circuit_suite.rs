//! Short-circuit mechanism end to end on the transit triangle.

mod common;

use pfatlas::cases;
use pfatlas::enumeration::{
    enumerate_total_degree, import_csv_rows, validate_imported, EnumConfig,
};
use pfatlas::model::BusId;
use pfatlas::power_flow::PfModel;
use pfatlas::short_circuit::{
    classify_set, classify_solution, count_short_circuit, kcl_check, ClassifyConfig, SolutionKind,
};

fn transit_bus_index() -> usize {
    1 // bus 2 of the triangle
}

#[test]
fn light_load_triangle_has_a_short_circuit_root() {
    let case = cases::three_bus_transit().scale_loads(0.1);
    let model = PfModel::new(&case).unwrap();
    let set = enumerate_total_degree(&case, 0.1, &EnumConfig::default()).unwrap();
    let labelled = classify_set(&set, &case, &ClassifyConfig::default()).unwrap();

    let mut found = 0;
    for sol in &labelled.solutions {
        let label = sol.label.as_ref().unwrap();
        if label.kind == SolutionKind::ShortCircuit {
            found += 1;
            assert_eq!(label.grounded_buses, vec![BusId(2)]);
            assert!(sol.voltages.magnitude(transit_bus_index()) < 1e-6);
            let phantom = kcl_check(&model, sol, label).unwrap();
            assert_eq!(phantom.len(), 1);
            assert!(
                phantom[0].1 > 1e-6,
                "phantom ground current {}",
                phantom[0].1
            );
            // Evidence mirrors the phantom current.
            assert_eq!(label.evidence[0].current, phantom[0].1);
        }
    }
    assert!(found >= 1, "no ShortCircuit label at 10% load");
    assert!(
        labelled.len() > found,
        "regular solutions should coexist with short-circuit ones"
    );
}

#[test]
fn regularization_removes_every_short_circuit_solution() {
    let scaled = cases::three_bus_transit().scale_loads(0.1);
    let reg = scaled.regularize_transit_buses(1e-5).unwrap();
    assert!(reg.detect_transit_buses().is_empty());

    let model = PfModel::new(&reg).unwrap();
    let set = enumerate_total_degree(&reg, 0.1, &EnumConfig::default()).unwrap();
    assert!(!set.is_empty());
    let (total, sc) = count_short_circuit(&set, &reg).unwrap();
    assert_eq!(sc, 0, "epsilon injection must kill short circuits");
    assert_eq!(total, set.len());

    let idx = transit_bus_index();
    for sol in &set.solutions {
        let v = sol.voltages.magnitude(idx);
        let i = model.current_magnitude(&sol.voltages, idx);
        assert!(v > 1e-6, "former transit bus voltage {v:e}");
        assert!(i > 1e-6, "former transit bus current {i:e}");
    }
}

#[test]
fn short_circuit_solutions_vanish_at_heavy_load() {
    let case = cases::three_bus_transit();
    let counts: Vec<(usize, usize)> = [0.1, 1.0]
        .iter()
        .map(|&lambda| {
            let scaled = case.scale_loads(lambda);
            let set = enumerate_total_degree(&scaled, lambda, &EnumConfig::default()).unwrap();
            count_short_circuit(&set, &scaled).unwrap()
        })
        .collect();
    assert!(
        counts[0].1 >= counts[1].1,
        "light load must admit at least as many short-circuit solutions: {counts:?}"
    );
    assert!(counts[0].1 >= 1);
}

#[test]
fn empty_set_counts_as_zero() {
    // Far past the saddle node the set is provably empty.
    let case = cases::two_bus_default().scale_loads(20.0);
    let set = enumerate_total_degree(&case, 20.0, &EnumConfig::default()).unwrap();
    assert!(set.is_empty());
    assert_eq!(count_short_circuit(&set, &case).unwrap(), (0, 0));
}

#[test]
fn count_rejects_foreign_cases() {
    let case = cases::three_bus_transit();
    let set = enumerate_total_degree(&case, 1.0, &EnumConfig::default()).unwrap();
    let other = cases::three_bus_chain();
    assert!(count_short_circuit(&set, &other).is_err());
}

#[test]
fn classification_is_method_independent() {
    // Labels of imported rows equal labels of the self-computed set.
    let case = cases::three_bus_transit().scale_loads(0.1);
    let model = PfModel::new(&case).unwrap();
    let ours = enumerate_total_degree(&case, 0.1, &EnumConfig::default()).unwrap();
    let rows = import_csv_rows(&ours.to_csv()).unwrap();
    let imported = validate_imported(&model, 0.1, rows, ours.solver).set;
    assert_eq!(imported.len(), ours.len());

    let cfg = ClassifyConfig::default();
    for (a, b) in ours.solutions.iter().zip(&imported.solutions) {
        let la = classify_solution(&case, &model, a, &cfg);
        let lb = classify_solution(&case, &model, b, &cfg);
        assert_eq!(la.kind, lb.kind);
        assert_eq!(la.grounded_buses, lb.grounded_buses);
    }
}
