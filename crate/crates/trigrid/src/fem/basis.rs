//! Tensor-product Lagrange bases of order 1 and 2 on the unit reference cell.

use crate::geom::Vec3;

pub const MAX_NODES: usize = 27;

/// Lagrange basis of order `p` on [0,1]^3 with `(p+1)^3` nodes in
/// lexicographic order (x fastest).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Basis {
    pub p: usize,
}

/// Shape function values (and reference gradients) at one evaluation point.
#[derive(Clone, Copy)]
pub struct ShapeValues {
    pub n: usize,
    pub value: [f64; MAX_NODES],
    pub grad: [[f64; 3]; MAX_NODES],
}

#[inline]
fn line_shapes(p: usize, t: f64) -> ([f64; 3], [f64; 3]) {
    match p {
        1 => ([1.0 - t, t, 0.0], [-1.0, 1.0, 0.0]),
        2 => (
            [2.0 * t * t - 3.0 * t + 1.0, 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)],
            [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
        ),
        _ => panic!("unsupported basis order {p}"),
    }
}

impl Basis {
    pub fn new(p: usize) -> Self {
        assert!(p == 1 || p == 2, "basis order must be 1 or 2");
        Self { p }
    }

    pub fn nodes_per_cell(&self) -> usize {
        (self.p + 1).pow(3)
    }

    /// Local integer offsets (a, b, c) of node `i`, each in 0..=p.
    pub fn node_offset(&self, i: usize) -> [usize; 3] {
        let m = self.p + 1;
        [i % m, (i / m) % m, i / (m * m)]
    }

    /// Reference coordinates of node `i`.
    pub fn node_coords(&self, i: usize) -> Vec3 {
        let o = self.node_offset(i);
        Vec3::new(
            o[0] as f64 / self.p as f64,
            o[1] as f64 / self.p as f64,
            o[2] as f64 / self.p as f64,
        )
    }

    /// Values and reference-cell gradients of all shape functions at `xi`.
    /// Valid outside [0,1]^3 too (polynomial extrapolation).
    pub fn eval(&self, xi: Vec3) -> ShapeValues {
        let (lx, dx) = line_shapes(self.p, xi.x);
        let (ly, dy) = line_shapes(self.p, xi.y);
        let (lz, dz) = line_shapes(self.p, xi.z);
        let m = self.p + 1;
        let mut out = ShapeValues { n: m * m * m, value: [0.0; MAX_NODES], grad: [[0.0; 3]; MAX_NODES] };
        let mut i = 0;
        for c in 0..m {
            for b in 0..m {
                for a in 0..m {
                    out.value[i] = lx[a] * ly[b] * lz[c];
                    out.grad[i] = [
                        dx[a] * ly[b] * lz[c],
                        lx[a] * dy[b] * lz[c],
                        lx[a] * ly[b] * dz[c],
                    ];
                    i += 1;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SplitMix64;

    #[test]
    fn partition_of_unity_and_kronecker() {
        for p in [1, 2] {
            let basis = Basis::new(p);
            let mut rng = SplitMix64::new(11);
            for _ in 0..50 {
                // Points inside and outside the cell (extrapolation range).
                let xi = Vec3::new(rng.range(-0.5, 1.5), rng.range(-0.5, 1.5), rng.range(-0.5, 1.5));
                let s = basis.eval(xi);
                let sum: f64 = s.value[..s.n].iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "p={p} at {xi:?}: {sum}");
                let gsum: [f64; 3] = s.grad[..s.n].iter().fold([0.0; 3], |acc, g| {
                    [acc[0] + g[0], acc[1] + g[1], acc[2] + g[2]]
                });
                for a in 0..3 {
                    assert!(gsum[a].abs() < 1e-12);
                }
            }
            for i in 0..basis.nodes_per_cell() {
                let s = basis.eval(basis.node_coords(i));
                for j in 0..basis.nodes_per_cell() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((s.value[j] - expect).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn reproduces_polynomials_of_its_degree() {
        for p in [1usize, 2] {
            let basis = Basis::new(p);
            let f = |x: Vec3| {
                if p == 1 {
                    1.0 + 2.0 * x.x - x.z + 0.5 * x.x * x.y
                } else {
                    x.x * x.x - x.y * x.z + 3.0 * x.z * x.z - x.x
                }
            };
            let nodal: Vec<f64> = (0..basis.nodes_per_cell()).map(|i| f(basis.node_coords(i))).collect();
            let mut rng = SplitMix64::new(3);
            for _ in 0..30 {
                let xi = Vec3::new(rng.next_f64(), rng.next_f64(), rng.next_f64());
                let s = basis.eval(xi);
                let u: f64 = (0..basis.nodes_per_cell()).map(|i| s.value[i] * nodal[i]).sum();
                assert!((u - f(xi)).abs() < 1e-12);
            }
        }
    }
}
