use super::{CsrMatrix, LinalgError};

/// Cholesky factor stored by rows over the matrix envelope (profile). Fill-in
/// stays inside the envelope, which is narrow for lexicographically numbered
/// tensor-product splines.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    ptr: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        Self::factor_shifted(a, 0.0)
    }

    /// Factors `A + shift I`. Only the lower triangle of `A` is read.
    pub fn factor_shifted(a: &CsrMatrix, shift: f64) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        let first = a.row_first_col();
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        for i in 0..n {
            ptr.push(ptr[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; ptr[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[ptr[i] + j - first[i]] = v;
                }
            }
            data[ptr[i] + i - first[i]] += shift;
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = ptr[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = ptr[j];
                let mut s = data[row_i + j - fi];
                for k in k0..j {
                    s -= data[row_i + k - fi] * data[row_j + k - fj];
                }
                data[row_i + j - fi] = s / data[row_j + j - fj];
            }
            let mut d = data[row_i + i - fi];
            for k in fi..i {
                let l = data[row_i + k - fi];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::FactorizationBreakdown { pivot: i, value: d });
            }
            data[row_i + i - fi] = d.sqrt();
        }
        Ok(Self { first, ptr, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.ptr[i]..self.ptr[i + 1]];
            let mut s = x[i];
            for k in fi..i {
                s -= row[k - fi] * x[k];
            }
            x[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.ptr[i]..self.ptr[i + 1]];
            let xi = x[i] / row[i - fi];
            x[i] = xi;
            for k in fi..i {
                x[k] -= row[k - fi] * xi;
            }
        }
    }
}
