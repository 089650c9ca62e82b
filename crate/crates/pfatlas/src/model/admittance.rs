//! Sparse nodal admittance matrix.

use super::{CaseError, NetworkCase};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Sparse complex nodal admittance matrix Y such that `I = Y * V`.
///
/// Rows are stored as sorted `(column, value)` adjacency lists. The sparsity
/// structure is symmetric even when taps or phase shifters break value
/// symmetry. Immutable after construction; safe to share across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl AdmittanceMatrix {
    /// Build the nodal admittance matrix from branch and shunt data.
    ///
    /// Branch model: series admittance `ys = 1/z`, half the total charging
    /// susceptance at each end, off-nominal complex tap `t·e^{j·shift}` at
    /// the from end:
    ///
    /// ```text
    /// y_ff = (ys + j b/2) / (t·conj(t))    y_ft = -ys / conj(t)
    /// y_tf = -ys / t                        y_tt =  ys + j b/2
    /// ```
    pub fn build(case: &NetworkCase) -> Result<AdmittanceMatrix, CaseError> {
        let n = case.buses.len();
        let mut dense: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; n]; n];
        let mut structure: Vec<Vec<bool>> = vec![vec![false; n]; n];

        for br in &case.branches {
            if br.impedance == Complex64::ZERO {
                return Err(CaseError::SingularBranch {
                    from: br.from,
                    to: br.to,
                });
            }
            let f = case.bus_index(br.from).expect("validated branch endpoint");
            let t = case.bus_index(br.to).expect("validated branch endpoint");
            let ys = Complex64::new(1.0, 0.0) / br.impedance;
            let y_sh = Complex64::new(0.0, br.charging / 2.0);
            let tap = Complex64::from_polar(br.tap, br.shift_deg * PI / 180.0);

            dense[f][f] += (ys + y_sh) / (tap * tap.conj());
            dense[f][t] += -ys / tap.conj();
            dense[t][f] += -ys / tap;
            dense[t][t] += ys + y_sh;
            structure[f][t] = true;
            structure[t][f] = true;
        }
        for (i, bus) in case.buses.iter().enumerate() {
            dense[i][i] += bus.shunt;
            structure[i][i] = true;
        }

        let rows = dense
            .into_iter()
            .zip(structure)
            .map(|(row, occ)| {
                row.into_iter()
                    .zip(occ)
                    .enumerate()
                    .filter(|(_, (v, occupied))| *occupied || *v != Complex64::ZERO)
                    .map(|(j, (v, _))| (j, v))
                    .collect()
            })
            .collect();
        Ok(AdmittanceMatrix { rows })
    }

    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    /// Stored entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .iter()
            .find(|(col, _)| *col == j)
            .map(|(_, v)| *v)
            .unwrap_or(Complex64::ZERO)
    }

    /// Nodal current at bus `i` for voltage vector `v`.
    pub fn current(&self, i: usize, v: &[Complex64]) -> Complex64 {
        self.rows[i].iter().map(|(j, y)| y * v[*j]).sum()
    }

    /// Full current vector `I = Y * V`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dimension()).map(|i| self.current(i, v)).collect()
    }

    pub fn row_sum(&self, i: usize) -> Complex64 {
        self.rows[i].iter().map(|(_, v)| v).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                m[(i, *j)] = *v;
            }
        }
        m
    }

    /// True if entry (i, j) is structurally present.
    pub fn has_entry(&self, i: usize, j: usize) -> bool {
        self.rows[i].iter().any(|(col, _)| *col == j)
    }
}
