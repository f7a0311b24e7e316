//! Sparse LDL^T factorization (up-looking, elimination-tree based) for
//! symmetric positive definite matrices in natural order.

use crate::error::{Error, Result};
use crate::fem::CsrMatrix;

pub struct SparseLdl {
    n: usize,
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl SparseLdl {
    /// Factorizes a symmetric positive definite CSR matrix. Only the upper
    /// triangle is read (columns of the lower factor come from rows by
    /// symmetry).
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        // Symbolic: elimination tree and column counts.
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let (cols, _) = a.row(k);
            for &jc in cols {
                let mut j = jc as usize;
                if j >= k {
                    break; // sorted row: remaining entries are upper
                }
                while flag[j] != k {
                    if parent[j] == usize::MAX {
                        parent[j] = k;
                    }
                    lnz[j] += 1;
                    flag[j] = k;
                    j = parent[j];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz = lp[n];
        let mut li = vec![0u32; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut d = vec![0.0f64; n];
        // Numeric: up-looking with a sparse right-hand side per row.
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut fill = lp.clone();
        for f in flag.iter_mut() {
            *f = usize::MAX;
        }
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            y[k] = 0.0;
            let (cols, vals) = a.row(k);
            for (&jc, &v) in cols.iter().zip(vals) {
                let j = jc as usize;
                if j > k {
                    break;
                }
                y[j] += v;
                let mut len = 0usize;
                let mut i = j;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                // Reverse the path onto the stack (etree order).
                for l in (0..len).rev() {
                    top -= 1;
                    pattern[top] = pattern[l];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &j in &pattern[top..n] {
                let yj = y[j];
                y[j] = 0.0;
                for p in lp[j]..fill[j] {
                    y[li[p] as usize] -= lx[p] * yj;
                }
                let l_kj = yj / d[j];
                d[k] -= l_kj * yj;
                li[fill[j]] = k as u32;
                lx[fill[j]] = l_kj;
                fill[j] += 1;
            }
            if d[k] <= 0.0 || !d[k].is_finite() {
                return Err(Error::Solver(format!(
                    "LDL pivot {k} is {:.3e}; matrix not positive definite",
                    d[k]
                )));
            }
        }
        Ok(Self { n, lp, li, lx, d })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for j in 0..self.n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p] as usize] -= self.lx[p] * xj;
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                xj -= self.lx[p] * x[self.li[p] as usize];
            }
            x[j] = xj;
        }
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }
}
