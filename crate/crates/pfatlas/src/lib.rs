//! Multi-solution AC power flow.
//!
//! This crate enumerates distinct solutions of the AC power-balance
//! equations for small-to-medium networks, classifies the "short circuit"
//! solutions that appear at zero-injection transit buses, applies the
//! epsilon-injection regularization that removes them, and computes
//! distribution statistics over solution sets: count-versus-load sweeps,
//! voltage scatter patterns, magnitude histograms, and engineering-limit
//! filters.
//!
//! # Pipeline
//!
//! ```
//! use pfatlas::{cases, enumeration, short_circuit};
//!
//! let case = cases::three_bus_transit().scale_loads(0.1);
//! let cfg = enumeration::EnumConfig::default();
//! let set = enumeration::enumerate_total_degree(&case, 0.1, &cfg).unwrap();
//! let (total, short_circuit) = short_circuit::count_short_circuit(&set, &case).unwrap();
//! assert!(total >= 2 && short_circuit >= 1);
//! ```
//!
//! # Parallelism
//!
//! Path tracking, multi-start refinement, classification, and sweep grid
//! points fan out through [rayon] when the default `parallel` feature is on.
//! All merges preserve input order, so outputs are byte-identical for any
//! worker count, and `--no-default-features` builds run the same code
//! sequentially.
//!
//! [rayon]: https://docs.rs/rayon

pub mod analytics;
pub mod cases;
pub mod enumeration;
pub mod model;
mod par;
pub mod power_flow;
pub mod short_circuit;
pub mod sweep;

pub use enumeration::{EnumConfig, SolutionSet};
pub use model::{NetworkCase, parse_case};
pub use power_flow::{PfModel, PowerFlowSolution, SolverConfig, VoltageVector};
