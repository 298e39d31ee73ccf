use serde::Serialize;

use super::LinalgError;
use crate::assembly::SystemMatrices;
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalReport {
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub tol: f64,
    pub removed_energy: f64,
}

impl RemovalReport {
    pub fn none(n: usize) -> Self {
        Self {
            kept: (0..n).collect(),
            removed: Vec::new(),
            tol: 0.0,
            removed_energy: 0.0,
        }
    }
}

/// Removes the longest prefix of DOFs, sorted by ascending energy norm (ties by
/// index), whose squared norms sum to at most `(c h^p)^2`.
pub fn basis_removal(energy_norms: &[f64], c: f64, h: f64, p: usize) -> RemovalReport {
    let tol = c * h.powi(p as i32);
    let tol2 = tol * tol;
    let mut order: Vec<usize> = (0..energy_norms.len()).collect();
    order.sort_by(|&a, &b| energy_norms[a].total_cmp(&energy_norms[b]).then(a.cmp(&b)));

    let mut acc = 0.0;
    let mut n_removed = 0;
    for &i in &order {
        let next = acc + energy_norms[i] * energy_norms[i];
        if next > tol2 {
            break;
        }
        acc = next;
        n_removed += 1;
    }
    let mut removed = order[..n_removed].to_vec();
    removed.sort_unstable();
    let mut kept = order[n_removed..].to_vec();
    kept.sort_unstable();
    RemovalReport {
        kept,
        removed,
        tol,
        removed_energy: acc,
    }
}

/// System on the kept DOFs only, with the map back to the full numbering.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub kept: Vec<usize>,
    pub n_full: usize,
}

impl ReducedSystem {
    /// Scatters a reduced solution back, with zeros at removed DOFs.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_full];
        for (&i, &v) in self.kept.iter().zip(x) {
            full[i] = v;
        }
        full
    }
}

pub fn restrict_system(sys: &SystemMatrices, report: &RemovalReport) -> Result<ReducedSystem, LinalgError> {
    let n = sys.b.len();
    if report.kept.is_empty() {
        return Err(LinalgError::Empty);
    }
    if let Some(&bad) = report.kept.iter().chain(&report.removed).find(|&&i| i >= n) {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: bad + 1,
        });
    }
    Ok(ReducedSystem {
        a: sys.a.principal_submatrix(&report.kept),
        b: report.kept.iter().map(|&i| sys.b[i]).collect(),
        kept: report.kept.clone(),
        n_full: n,
    })
}
