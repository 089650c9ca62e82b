//! Voltage-pattern grouping of buses.
//!
//! Buses are compared by the shape of their scatter clouds: each cloud is
//! translated to its centroid, rescaled to unit RMS radius, and compared by
//! symmetric Hausdorff distance. Buses land in one group when their distance
//! falls under the cut threshold (single linkage). This operationalizes a
//! visual pattern judgement and is explicitly heuristic; report agreement
//! fractions against a reference grouping rather than asserting it.

use super::AnalyticsError;
use crate::enumeration::SolutionSet;
use crate::model::{BusId, NetworkCase};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternConfig {
    /// Minimum set size for clouds to be shape-meaningful.
    pub min_solutions: usize,
    /// Single-linkage cut on normalized Hausdorff distance.
    pub cut: f64,
    /// Clouds larger than this are subsampled (by value order, so the result
    /// does not depend on solution order).
    pub max_cloud: usize,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            min_solutions: 100,
            cut: 0.35,
            max_cloud: 2000,
        }
    }
}

/// Group buses by scatter-cloud shape. Groups and members are sorted by bus
/// id; ties in the linkage are irrelevant because single linkage is
/// order-free.
pub fn pattern_cluster(
    set: &SolutionSet,
    case: &NetworkCase,
    cfg: &PatternConfig,
) -> Result<Vec<Vec<BusId>>, AnalyticsError> {
    if set.len() < cfg.min_solutions {
        return Err(AnalyticsError::TooFewSolutions {
            have: set.len(),
            need: cfg.min_solutions,
        });
    }
    let clouds: Vec<Vec<(f64, f64)>> = (0..case.buses.len())
        .map(|i| normalized_cloud(set, i, cfg.max_cloud))
        .collect();

    let n = case.buses.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if hausdorff(&clouds[i], &clouds[j]) < cfg.cut {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<BusId>> = Vec::new();
    let mut root_of_group: Vec<usize> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match root_of_group.iter().position(|r| *r == root) {
            Some(g) => groups[g].push(case.buses[i].id),
            None => {
                root_of_group.push(root);
                groups.push(vec![case.buses[i].id]);
            }
        }
    }
    for g in &mut groups {
        g.sort();
    }
    groups.sort_by_key(|g| g[0]);
    Ok(groups)
}

/// Scatter cloud of one bus, translated to its centroid and scaled to unit
/// RMS radius. Degenerate (single-point) clouds normalize to all zeros.
fn normalized_cloud(set: &SolutionSet, bus: usize, max_cloud: usize) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = set
        .solutions
        .iter()
        .map(|s| {
            let v = s.voltages.get(bus);
            (v.re, v.im)
        })
        .collect();
    // Value order, then stride: identical for any permutation of the set.
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if pts.len() > max_cloud {
        let stride = pts.len() as f64 / max_cloud as f64;
        pts = (0..max_cloud)
            .map(|k| pts[(k as f64 * stride) as usize])
            .collect();
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let rms = (pts
        .iter()
        .map(|p| (p.0 - cx).powi(2) + (p.1 - cy).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let scale = if rms > 0.0 { 1.0 / rms } else { 0.0 };
    pts.iter()
        .map(|p| ((p.0 - cx) * scale, (p.1 - cy) * scale))
        .collect()
}

/// Symmetric Hausdorff distance between finite point sets.
fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    fn directed(from: &[(f64, f64)], to: &[(f64, f64)]) -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| {
                        let (dx, dy) = (p.0 - q.0, p.1 - q.1);
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
    directed(a, b).max(directed(b, a)).sqrt()
}
