//! Sparse polynomials in the spacetime variables `(x1, x2, t)`.
//!
//! Used for symbolic verification of the tent map: compositions with the
//! (piecewise polynomial) map `Φ` stay polynomial on each element, so the
//! divergence identities can be checked with exact derivatives.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponents of `(x1, x2, t)`.
pub type Exponent = [u32; 3];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Exponent, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    /// The coordinate function of variable `i` (0 = x1, 1 = x2, 2 = t).
    pub fn var(i: usize) -> Self {
        let mut e = [0; 3];
        e[i] = 1;
        Self::monomial(1.0, e)
    }

    pub fn monomial(c: f64, e: Exponent) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(e, c);
        }
        Self { terms }
    }

    /// Affine function `c0 + c1 x1 + c2 x2`.
    pub fn affine_in_space(c0: f64, c1: f64, c2: f64) -> Self {
        &(&Self::constant(c0) + &Self::monomial(c1, [1, 0, 0])) + &Self::monomial(c2, [0, 1, 0])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Largest absolute coefficient.
    pub fn scale(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, p: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                out.add_term(f, c * e[i] as f64);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Substitutes `sub[i]` for variable `i`.
    pub fn compose(&self, sub: &[Poly; 3]) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let term = &(&sub[0].pow(e[0]) * &sub[1].pow(e[1])) * &sub[2].pow(e[2]);
            out = &out + &term.scaled(*c);
        }
        out
    }

    fn add_term(&mut self, e: Exponent, c: f64) {
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scaled(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_holds() {
        let a = &Poly::affine_in_space(1.0, 2.0, -1.0) * &Poly::var(2);
        let b = &Poly::var(0).pow(2) + &Poly::monomial(3.0, [0, 1, 1]);
        let lhs = (&a * &b).deriv(0);
        let rhs = &(&a.deriv(0) * &b) + &(&a * &b.deriv(0));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn compose_matches_pointwise_evaluation() {
        let f = &Poly::monomial(2.0, [1, 2, 0]) + &Poly::monomial(-1.0, [0, 0, 3]);
        let sub = [
            Poly::var(1),
            &Poly::var(0) + &Poly::var(2),
            Poly::affine_in_space(0.5, 1.0, 0.0),
        ];
        let g = f.compose(&sub);
        let p = [0.3, -0.7, 0.2];
        let q = [sub[0].eval(p), sub[1].eval(p), sub[2].eval(p)];
        assert!((g.eval(p) - f.eval(q)).abs() < 1e-14);
    }
}
