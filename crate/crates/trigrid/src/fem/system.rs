//! Compressed sparse row matrix and the assembled linear system.

/// Symmetric sparse matrix in CSR form. Row column indices are sorted.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the sparsity structure from per-row sorted, deduplicated
    /// column lists; values start at zero.
    pub fn from_pattern(rows: Vec<Vec<u32>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        Self { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Adds `v` at (i, j); the position must exist in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: u32, v: f64) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.cols[r.clone()];
        match cols.binary_search(&j) {
            Ok(pos) => self.vals[r.start + pos] += v,
            Err(_) => panic!("entry ({i}, {j}) outside the assembled pattern"),
        }
    }

    pub fn get(&self, i: usize, j: u32) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, out) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let cols = &self.cols[r.clone()];
            let vals = &self.vals[r];
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            *out = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i as u32)).collect()
    }

    /// Largest relative asymmetry max |A_ij - A_ji| / max|A|.
    pub fn symmetry_error(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k] as usize;
                if j < i {
                    continue;
                }
                let diff = (self.vals[k] - self.get(j, i as u32)).abs();
                worst = worst.max(diff / scale);
            }
        }
        worst
    }

    /// Dense copy for small oracle comparisons.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }
}

/// Reduced linear system over free coefficients.
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}
