//! Orthonormal polynomial basis of `P_p` on the reference triangle.
//!
//! Built from monomials centered at the centroid, orthonormalized by a
//! Cholesky factor of their Gram matrix. A second pass removes the residual
//! loss of orthogonality from the first.

use nalgebra::DMatrix;

use crate::quadrature::TriangleRule;

/// Dimension of `P_p` in two variables.
pub fn dim_p(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Exponents `(a, b)` with `a + b <= p`, ordered by total degree.
pub fn monomial_exponents(p: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(dim_p(p));
    for deg in 0..=p as u32 {
        for b in 0..=deg {
            out.push((deg - b, b));
        }
    }
    out
}

const CENTER: f64 = 1.0 / 3.0;

fn powi(x: f64, n: u32) -> f64 {
    x.powi(n as i32)
}

/// Basis functions as coefficient rows over centered monomials.
#[derive(Clone, Debug)]
pub struct RefBasis {
    pub p: usize,
    exps: Vec<(u32, u32)>,
    /// `coeffs[(i, j)]`: coefficient of monomial `j` in basis function `i`.
    coeffs: DMatrix<f64>,
}

impl RefBasis {
    pub fn new(p: usize) -> Self {
        let exps = monomial_exponents(p);
        let n = exps.len();
        let rule = TriangleRule::exact_to(2 * p);
        let mono = |xi: [f64; 2]| -> Vec<f64> {
            exps.iter()
                .map(|&(a, b)| powi(xi[0] - CENTER, a) * powi(xi[1] - CENTER, b))
                .collect()
        };
        let samples: Vec<Vec<f64>> = rule.points.iter().map(|&x| mono(x)).collect();
        let gram = |c: &DMatrix<f64>| {
            let mut g = DMatrix::zeros(n, n);
            for (m, w) in samples.iter().zip(&rule.weights) {
                let v = c * nalgebra::DVector::from_column_slice(m);
                g += &v * v.transpose() * *w;
            }
            g
        };
        let mut coeffs = DMatrix::<f64>::identity(n, n);
        for _ in 0..2 {
            let g = gram(&coeffs);
            let l = g.cholesky().expect("Gram matrix of a polynomial basis is SPD").l();
            let linv = l.try_inverse().expect("Cholesky factor is invertible");
            coeffs = linv * coeffs;
        }
        Self { p, exps, coeffs }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let m: Vec<f64> = self
            .exps
            .iter()
            .map(|&(a, b)| powi(xi[0] - CENTER, a) * powi(xi[1] - CENTER, b))
            .collect();
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.coeffs[(i, j)] * m[j]).sum())
            .collect()
    }

    pub fn eval_grad(&self, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let (x, y) = (xi[0] - CENTER, xi[1] - CENTER);
        let d: Vec<[f64; 2]> = self
            .exps
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 { a as f64 * powi(x, a - 1) * powi(y, b) } else { 0.0 };
                let dy = if b > 0 { b as f64 * powi(x, a) * powi(y, b - 1) } else { 0.0 };
                [dx, dy]
            })
            .collect();
        (0..self.len())
            .map(|i| {
                let mut g = [0.0; 2];
                for (j, dj) in d.iter().enumerate() {
                    g[0] += self.coeffs[(i, j)] * dj[0];
                    g[1] += self.coeffs[(i, j)] * dj[1];
                }
                g
            })
            .collect()
    }
}
