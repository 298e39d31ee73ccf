use std::fmt::Write as _;

use nalgebra::DMatrix;

/// Compressed sparse row matrix with sorted column indices in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix on a given pattern. Each row's columns must be sorted and unique.
    pub fn from_pattern(n_cols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in &rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n_rows: rows.len(),
            n_cols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern(n, (0..n).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    /// Builds a matrix from a dense one, keeping exact nonzeros.
    pub fn from_dense(d: &DMatrix<f64>) -> Self {
        let rows = (0..d.nrows())
            .map(|i| (0..d.ncols()).filter(|&j| d[(i, j)] != 0.0).collect())
            .collect();
        let mut m = Self::from_pattern(d.ncols(), rows);
        for i in 0..m.n_rows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.values[k] = d[(i, m.col_idx[k])];
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.n_rows
    }

    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds to an entry in the pattern. Panics if `(i, j)` is outside it.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum();
        }
    }

    /// `x^T A y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Bitwise symmetry of values and pattern.
    pub fn is_symmetric_exact(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(&j, &v)| self.position(j, i).is_some_and(|k| self.values[k].to_bits() == v.to_bits()))
        })
    }

    /// `max |a_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n_cols];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut rows = Vec::with_capacity(keep.len());
        let mut vals = Vec::new();
        for &i in keep {
            let (cols, v) = self.row(i);
            let mut r = Vec::new();
            for (&j, &a) in cols.iter().zip(v) {
                if new_index[j] != usize::MAX {
                    r.push(new_index[j]);
                    vals.push(a);
                }
            }
            rows.push(r);
        }
        let mut m = Self::from_pattern(keep.len(), rows);
        m.values = vals;
        m
    }

    /// `self + alpha * other`, both on the same pattern.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        assert_eq!(self.row_ptr, other.row_ptr);
        assert_eq!(self.col_idx, other.col_idx);
        let mut m = self.clone();
        for (a, b) in m.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        m
    }

    /// Coordinate text: `i j value` per stored entry, 17 significant digits.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 40);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{i} {j} {v:.16e}");
            }
        }
        out
    }

    /// Lower bandwidth in the first stored column of each row.
    pub fn row_first_col(&self) -> Vec<usize> {
        (0..self.n_rows)
            .map(|i| {
                let (cols, _) = self.row(i);
                cols.first().copied().unwrap_or(i).min(i)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_add_get() {
        let mut m = CsrMatrix::from_pattern(3, vec![vec![0, 2], vec![1], vec![0, 2]]);
        m.add(0, 2, 1.5);
        m.add(2, 0, 1.5);
        m.add(1, 1, 2.0);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(0, 1), 0.0);
        assert!(m.is_symmetric_exact());
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![1.5, 2.0, 1.5]);
    }

    #[test]
    fn submatrix() {
        let d = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 2.0, 0.0, 2.0, 5.0]);
        let m = CsrMatrix::from_dense(&d);
        let s = m.principal_submatrix(&[0, 2]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 5.0]));
        assert!(m.to_coo_text().starts_with("0 0 4.0000000000000000e0\n"));
    }
}
