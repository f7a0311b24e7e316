//! Preconditioned conjugate gradients on abstract operators.

use crate::error::{Error, Result};

/// Outcome of a PCG run: solution, iteration count, and the relative
/// residual history (one entry per iteration).
#[derive(Clone, Debug)]
pub struct PcgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` with preconditioner
/// `M^-1`, starting from zero, until the recursive residual satisfies
/// `|r| <= tol |b|` or `max_iter` is reached. Detects indefiniteness via
/// `p^T A p <= 0`.
pub fn pcg(
    mut apply_a: impl FnMut(&[f64], &mut [f64]),
    mut apply_m_inv: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<PcgResult> {
    let n = b.len();
    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        return Ok(PcgResult { x: vec![0.0; n], iterations: 0, residuals: Vec::new(), converged: true });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    apply_m_inv(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut residuals = Vec::new();
    for it in 1..=max_iter {
        apply_a(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(Error::Solver(format!(
                "operator not positive definite: p^T A p = {pq:.3e} at iteration {it}"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rel = dot(&r, &r).sqrt() / norm_b;
        residuals.push(rel);
        if rel <= tol {
            return Ok(PcgResult { x, iterations: it, residuals, converged: true });
        }
        apply_m_inv(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let iterations = residuals.len();
    Ok(PcgResult { x, iterations, residuals, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.0];
        let res = pcg(
            |x, y| y.copy_from_slice(x),
            |x, y| y.copy_from_slice(x),
            &b,
            1e-12,
            10,
        )
        .unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        for (a, e) in res.x.iter().zip(&b) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_laplacian_matches_dense_oracle() {
        // 1D Laplacian tridiag(-1, 2, -1), n = 100, Jacobi preconditioner.
        let n = 100;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut v = 2.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        };
        let jacobi = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 0.5 * x[i];
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let res = pcg(apply, jacobi, &b, 1e-12, 1000).unwrap();
        assert!(res.converged);
        // Dense oracle.
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.0;
            if i > 0 {
                a[(i, i - 1)] = -1.0;
            }
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
            }
        }
        let exact = a.lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((res.x[i] - exact[i]).abs() < 1e-8, "{} vs {}", res.x[i], exact[i]);
        }
        // Residual history is monotone enough to end below tolerance.
        assert!(*res.residuals.last().unwrap() <= 1e-12);
    }

    #[test]
    fn indefinite_operator_is_an_error() {
        let b = vec![1.0, 1.0];
        let res = pcg(
            |x, y| {
                y[0] = -x[0];
                y[1] = -x[1];
            },
            |x, y| y.copy_from_slice(x),
            &b,
            1e-10,
            10,
        );
        assert!(res.is_err());
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let res = pcg(
            |x, y| y.copy_from_slice(x),
            |x, y| y.copy_from_slice(x),
            &[0.0, 0.0],
            1e-10,
            10,
        )
        .unwrap();
        assert!(res.converged);
        assert_eq!(res.x, vec![0.0, 0.0]);
    }
}
