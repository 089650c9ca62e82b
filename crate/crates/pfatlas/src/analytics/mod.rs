//! Distribution statistics over solution sets: scatter data, magnitude
//! histograms, engineering-limit filters, minimum-voltage tables, voltage
//! pattern grouping, and the 3-D voltage/reactive-power export.

mod cluster;

pub use cluster::{pattern_cluster, PatternConfig};

use crate::enumeration::SolutionSet;
use crate::model::{BusId, NetworkCase};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HISTOGRAM_BINS: usize = 100;
pub const HISTOGRAM_UPPER: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistogramScope {
    Bus(BusId),
    All,
}

/// Voltage magnitude counts over 100 even intervals of [0, 1.1] p.u.
///
/// Bin `k` covers `[k*0.011, (k+1)*0.011)`, right-closed at 1.1. Magnitudes
/// above 1.1 are counted separately: the range choice makes them rare, not
/// impossible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub scope: HistogramScope,
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<usize>,
    pub out_of_range: usize,
}

impl Histogram {
    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let w = self.upper / self.counts.len() as f64;
        (k as f64 * w, (k + 1) as f64 * w)
    }

    pub fn in_range_total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn modal_bin(&self) -> usize {
        self.counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }

    /// CSV rows `bin,lower,upper,count` (exactly one per bin).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,lower,upper,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bin_edges(k);
            out.push_str(&format!("{k},{lo},{hi},{c}\n"));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("solution set is empty")]
    EmptySet,
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("unknown generator index {0}")]
    UnknownGenerator(usize),
    #[error("need at least {need} solutions for pattern clustering, set has {have}")]
    TooFewSolutions { have: usize, need: usize },
    #[error("invalid limits: {0}")]
    BadLimits(String),
}

/// One point per solution in canonical set order: the complex voltage of
/// `bus` split into rectangular parts.
pub fn voltage_scatter(
    set: &SolutionSet,
    case: &NetworkCase,
    bus: BusId,
) -> Result<Vec<(f64, f64)>, AnalyticsError> {
    let idx = case.bus_index(bus).ok_or(AnalyticsError::UnknownBus(bus))?;
    Ok(set
        .solutions
        .iter()
        .map(|s| {
            let v = s.voltages.get(idx);
            (v.re, v.im)
        })
        .collect())
}

pub fn magnitude_histogram(
    set: &SolutionSet,
    case: &NetworkCase,
    scope: HistogramScope,
) -> Result<Histogram, AnalyticsError> {
    if set.is_empty() {
        return Err(AnalyticsError::EmptySet);
    }
    let indices: Vec<usize> = match scope {
        HistogramScope::Bus(id) => {
            vec![case.bus_index(id).ok_or(AnalyticsError::UnknownBus(id))?]
        }
        HistogramScope::All => (0..case.buses.len()).collect(),
    };
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    let mut out_of_range = 0usize;
    let width = HISTOGRAM_UPPER / HISTOGRAM_BINS as f64;
    for sol in &set.solutions {
        for &i in &indices {
            let v = sol.voltages.magnitude(i);
            if v > HISTOGRAM_UPPER {
                out_of_range += 1;
            } else {
                let bin = ((v / width) as usize).min(HISTOGRAM_BINS - 1);
                counts[bin] += 1;
            }
        }
    }
    Ok(Histogram {
        scope,
        lower: 0.0,
        upper: HISTOGRAM_UPPER,
        counts,
        out_of_range,
    })
}

/// Bus voltage bands and per-generator-bus reactive bands.
///
/// Multiple generators on one bus are aggregated: the bus passes when its
/// total reactive output lies within the summed capability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    pub bus_voltage: Vec<(BusId, f64, f64)>,
    pub gen_reactive: Vec<(BusId, f64, f64)>,
}

impl LimitSpec {
    pub fn from_case(case: &NetworkCase) -> LimitSpec {
        let bus_voltage = case
            .buses
            .iter()
            .map(|b| (b.id, b.v_min, b.v_max))
            .collect();
        let mut gen_reactive: Vec<(BusId, f64, f64)> = Vec::new();
        for g in &case.generators {
            match gen_reactive.iter_mut().find(|(b, _, _)| *b == g.bus) {
                Some((_, lo, hi)) => {
                    *lo += g.q_min;
                    *hi += g.q_max;
                }
                None => gen_reactive.push((g.bus, g.q_min, g.q_max)),
            }
        }
        gen_reactive.sort_by_key(|(b, _, _)| *b);
        LimitSpec {
            bus_voltage,
            gen_reactive,
        }
    }

    /// Vacuous filter: every band infinite.
    pub fn unbounded(case: &NetworkCase) -> LimitSpec {
        let mut spec = Self::from_case(case);
        for (_, lo, hi) in spec.bus_voltage.iter_mut().chain(spec.gen_reactive.iter_mut()) {
            *lo = f64::NEG_INFINITY;
            *hi = f64::INFINITY;
        }
        spec
    }

    fn validate(&self) -> Result<(), AnalyticsError> {
        for (bus, lo, hi) in self.bus_voltage.iter().chain(&self.gen_reactive) {
            if !(lo < hi) {
                return Err(AnalyticsError::BadLimits(format!(
                    "bus {bus}: lower bound {lo} not below upper {hi}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolutionViolations {
    pub solution: usize,
    /// (bus, magnitude) outside the voltage band.
    pub voltage: Vec<(BusId, f64)>,
    /// (bus, reactive output) outside the aggregated capability.
    pub reactive: Vec<(BusId, f64)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ViolationsReport {
    pub violations: Vec<SolutionViolations>,
}

/// Split a set into the solutions complying with every engineering limit and
/// a per-solution violation report.
pub fn apply_limits(
    set: &SolutionSet,
    case: &NetworkCase,
    limits: &LimitSpec,
) -> Result<(SolutionSet, ViolationsReport), AnalyticsError> {
    limits.validate()?;
    let mut within = set.clone();
    within.solutions.clear();
    let mut report = ViolationsReport::default();
    for (i, sol) in set.solutions.iter().enumerate() {
        let mut entry = SolutionViolations {
            solution: i,
            ..SolutionViolations::default()
        };
        for &(bus, lo, hi) in &limits.bus_voltage {
            let idx = case.bus_index(bus).ok_or(AnalyticsError::UnknownBus(bus))?;
            let v = sol.voltages.magnitude(idx);
            if v < lo || v > hi {
                entry.voltage.push((bus, v));
            }
        }
        for &(bus, lo, hi) in &limits.gen_reactive {
            // Reactive output computed once at solution construction and
            // shared verbatim with the V-Q export.
            let q = sol
                .reactive_at(bus)
                .ok_or(AnalyticsError::UnknownBus(bus))?;
            if q < lo || q > hi {
                entry.reactive.push((bus, q));
            }
        }
        if entry.voltage.is_empty() && entry.reactive.is_empty() {
            within.solutions.push(sol.clone());
        } else {
            report.violations.push(entry);
        }
    }
    Ok((within, report))
}

/// Smallest bus-voltage magnitude of each solution, sorted descending.
pub fn min_voltage_table(set: &SolutionSet) -> Result<Vec<f64>, AnalyticsError> {
    if set.is_empty() {
        return Err(AnalyticsError::EmptySet);
    }
    let mut table: Vec<f64> = set
        .solutions
        .iter()
        .map(|s| s.voltages.min_magnitude())
        .collect();
    table.sort_by(|a, b| b.total_cmp(a));
    Ok(table)
}

/// Plot data for the 3-D voltage/reactive figure: the voltage of `bus`
/// against the reactive output of generator `gen_index`, with that
/// generator's capability band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VqSurface {
    pub bus: BusId,
    pub gen_bus: BusId,
    pub q_min: f64,
    pub q_max: f64,
    /// (Re V, Im V, Q) per solution in canonical order.
    pub points: Vec<(f64, f64, f64)>,
}

impl VqSurface {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_v,im_v,q\n");
        for (re, im, q) in &self.points {
            out.push_str(&format!("{re},{im},{q}\n"));
        }
        out
    }
}

pub fn export_vq_surface(
    set: &SolutionSet,
    case: &NetworkCase,
    bus: BusId,
    gen_index: usize,
) -> Result<VqSurface, AnalyticsError> {
    let bus_idx = case.bus_index(bus).ok_or(AnalyticsError::UnknownBus(bus))?;
    let gen = case
        .generators
        .get(gen_index)
        .ok_or(AnalyticsError::UnknownGenerator(gen_index))?;
    let points = set
        .solutions
        .iter()
        .map(|s| {
            let v = s.voltages.get(bus_idx);
            let q = s
                .reactive_at(gen.bus)
                .expect("generator buses always carry computed reactive output");
            (v.re, v.im, q)
        })
        .collect();
    Ok(VqSurface {
        bus,
        gen_bus: gen.bus,
        q_min: gen.q_min,
        q_max: gen.q_max,
        points,
    })
}
