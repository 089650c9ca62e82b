//! Built-in test networks: the four standard transmission cases plus small
//! hand-made systems with known analytic structure.

use crate::model::{parse_case_named, Branch, Bus, BusId, BusKind, Generator, NetworkCase};
use num_complex::Complex64;

const CASE14: &str = include_str!("../cases/case14.m");
const CASE30: &str = include_str!("../cases/case30.m");
const CASE39: &str = include_str!("../cases/case39.m");
const CASE57: &str = include_str!("../cases/case57.m");

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["case14", "case30", "case39", "case57"];

/// Look up a built-in case by name.
pub fn builtin(name: &str) -> Option<NetworkCase> {
    let text = match name {
        "case14" => CASE14,
        "case30" => CASE30,
        "case39" => CASE39,
        "case57" => CASE57,
        _ => return None,
    };
    Some(parse_case_named(text, name).expect("built-in case files parse"))
}

/// Raw case-file text of a built-in case.
pub fn builtin_text(name: &str) -> Option<&'static str> {
    match name {
        "case14" => Some(CASE14),
        "case30" => Some(CASE30),
        "case39" => Some(CASE39),
        "case57" => Some(CASE57),
        _ => None,
    }
}

fn bus(id: u32, kind: BusKind, load: Complex64) -> Bus {
    Bus {
        id: BusId(id),
        kind,
        load,
        shunt: Complex64::ZERO,
        v_min: 0.9,
        v_max: 1.1,
    }
}

fn line(from: u32, to: u32, z: Complex64) -> Branch {
    Branch {
        from: BusId(from),
        to: BusId(to),
        impedance: z,
        charging: 0.0,
        tap: 1.0,
        shift_deg: 0.0,
    }
}

fn slack_gen(id: u32, v_set: f64) -> Generator {
    Generator {
        bus: BusId(id),
        p_set: 0.0,
        v_set,
        q_min: -10.0,
        q_max: 10.0,
    }
}

/// Slack (V = 1) feeding one PQ bus with demand `load` over impedance `z`.
///
/// The load bus voltage obeys a scalar quadratic: with `c = load * conj(z)`,
/// `Im V2 = Im c` and `Re V2 = 1/2 +- sqrt(1/4 - Re c - (Im c)^2)`, which
/// makes this family the closed-form reference for enumeration and
/// saddle-node tests.
pub fn two_bus(load: Complex64, z: Complex64) -> NetworkCase {
    NetworkCase {
        name: "twobus".into(),
        base_mva: 100.0,
        buses: vec![
            bus(1, BusKind::Slack, Complex64::ZERO),
            bus(2, BusKind::Pq, load),
        ],
        branches: vec![line(1, 2, z)],
        generators: vec![slack_gen(1, 1.0)],
    }
}

/// The two-bus instance used by the acceptance suite.
pub fn two_bus_default() -> NetworkCase {
    two_bus(Complex64::new(0.4, 0.15), Complex64::new(0.05, 0.25))
}

/// Chain slack(1) - transit(2) - PQ load(3). The transit bus carries no
/// injection, so every solution has zero through-current mismatch there and
/// the network reduces to a series two-bus problem.
pub fn three_bus_chain() -> NetworkCase {
    let z = Complex64::new(0.04, 0.2);
    NetworkCase {
        name: "threebus_chain".into(),
        base_mva: 100.0,
        buses: vec![
            bus(1, BusKind::Slack, Complex64::ZERO),
            bus(2, BusKind::Pq, Complex64::ZERO),
            bus(3, BusKind::Pq, Complex64::new(0.4, 0.15)),
        ],
        branches: vec![line(1, 2, z), line(2, 3, z)],
        generators: vec![slack_gen(1, 1.0)],
    }
}

/// Triangle slack(1) - transit(2) - PQ load(3) with all three branches.
///
/// Grounding the transit vertex leaves the load bus fed through the direct
/// slack branch, so the grounded subproblem has isolated solutions and the
/// network admits genuine short-circuit solutions at light load.
pub fn three_bus_transit() -> NetworkCase {
    NetworkCase {
        name: "threebus_transit".into(),
        base_mva: 100.0,
        buses: vec![
            bus(1, BusKind::Slack, Complex64::ZERO),
            bus(2, BusKind::Pq, Complex64::ZERO),
            bus(3, BusKind::Pq, Complex64::new(0.35, 0.1)),
        ],
        branches: vec![
            line(1, 2, Complex64::new(0.06, 0.3)),
            line(2, 3, Complex64::new(0.06, 0.3)),
            line(1, 3, Complex64::new(0.08, 0.4)),
        ],
        generators: vec![slack_gen(1, 1.0)],
    }
}

/// Chain slack(1) - PQ load(2) - PV(3).
pub fn three_bus_pv() -> NetworkCase {
    let z = Complex64::new(0.05, 0.25);
    NetworkCase {
        name: "threebus_pv".into(),
        base_mva: 100.0,
        buses: vec![
            bus(1, BusKind::Slack, Complex64::ZERO),
            bus(2, BusKind::Pq, Complex64::new(0.3, 0.1)),
            bus(3, BusKind::Pv, Complex64::ZERO),
        ],
        branches: vec![line(1, 2, z), line(2, 3, z)],
        generators: vec![
            slack_gen(1, 1.0),
            Generator {
                bus: BusId(3),
                p_set: 0.2,
                v_set: 1.02,
                q_min: -0.5,
                q_max: 0.5,
            },
        ],
    }
}

/// Five-bus ring: slack plus four PQ loads. Used by the benches as a
/// mid-sized exhaustive-enumeration target (256 start paths).
pub fn five_bus_ring() -> NetworkCase {
    let z = Complex64::new(0.05, 0.22);
    NetworkCase {
        name: "fivebus_ring".into(),
        base_mva: 100.0,
        buses: vec![
            bus(1, BusKind::Slack, Complex64::ZERO),
            bus(2, BusKind::Pq, Complex64::new(0.25, 0.08)),
            bus(3, BusKind::Pq, Complex64::ZERO),
            bus(4, BusKind::Pq, Complex64::new(0.3, 0.1)),
            bus(5, BusKind::Pq, Complex64::new(0.2, 0.05)),
        ],
        branches: vec![
            line(1, 2, z),
            line(2, 3, z),
            line(3, 4, z),
            line(4, 5, z),
            line(5, 1, z),
        ],
        generators: vec![slack_gen(1, 1.0)],
    }
}
