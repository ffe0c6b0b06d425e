//! Dense-exponent multivariate polynomials with f64 coefficients.
//!
//! Small and exact where it matters: the symbol expansions never divide
//! and never cancel square roots numerically (odd powers of the
//! discriminant root drop out of the symmetric sum by construction), so
//! term exponents are exact integers and degree assertions carry no
//! floating-point tolerance.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    /// exponent vector -> coefficient; zero coefficients are pruned.
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Poly {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Poly {
        let mut p = Poly::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The monomial `xi_i`.
    pub fn var(nvars: usize, i: usize) -> Poly {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, 1.0);
        p
    }

    /// Linear form `sum_i coeffs[i] xi_i`.
    pub fn linear(coeffs: &[f64]) -> Poly {
        let mut p = Poly::zero(coeffs.len());
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                let mut e = vec![0; coeffs.len()];
                e[i] = 1;
                p.terms.insert(e, c);
            }
        }
        p
    }

    /// Diagonal quadratic form `sum_i coeffs[i] xi_i^2`.
    pub fn diagonal_quadratic(coeffs: &[f64]) -> Poly {
        let mut p = Poly::zero(coeffs.len());
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                let mut e = vec![0; coeffs.len()];
                e[i] = 2;
                p.terms.insert(e, c);
            }
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn add(&self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            let slot = out.terms.entry(e.clone()).or_insert(0.0);
            *slot += c;
            if *slot == 0.0 {
                out.terms.remove(e);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    pub fn mul(&self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let slot = out.terms.entry(e.clone()).or_insert(0.0);
                *slot += ca * cb;
                if *slot == 0.0 {
                    out.terms.remove(&e);
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(xi)
                    .map(|(p, v)| v.powi(*p as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Symbolic Laplacian `sum_i d^2/dxi_i^2`.
    pub fn laplacian(&self) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            for i in 0..self.nvars {
                if e[i] >= 2 {
                    let mut en = e.clone();
                    en[i] -= 2;
                    let coeff = c * (e[i] as f64) * (e[i] as f64 - 1.0);
                    let slot = out.terms.entry(en.clone()).or_insert(0.0);
                    *slot += coeff;
                    if *slot == 0.0 {
                        out.terms.remove(&en);
                    }
                }
            }
        }
        out
    }

    /// `k` applications of the symbolic Laplacian.
    pub fn laplacian_power(&self, k: u32) -> Poly {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.laplacian();
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_eval() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        // (x + 2y)^2 = x^2 + 4xy + 4y^2
        let p = x.add(&y.scale(2.0)).pow(2);
        assert_eq!(p.total_degree(), Some(2));
        assert!((p.eval(&[1.0, 1.0]) - 9.0).abs() < 1e-15);
        assert!((p.eval(&[2.0, -1.0]) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn laplacian_of_norm_powers() {
        // |xi|^2 -> 2n; |xi|^4 in 2 vars -> 16|xi|^2, twice -> 64.
        let norm2 = Poly::diagonal_quadratic(&[1.0, 1.0]);
        let lap = norm2.laplacian();
        assert_eq!(lap, Poly::constant(2, 4.0));

        let norm4 = norm2.pow(2);
        let l1 = norm4.laplacian();
        assert_eq!(l1, norm2.scale(16.0));
        assert_eq!(l1.laplacian(), Poly::constant(2, 64.0));
    }

    #[test]
    fn exact_cancellation_prunes_terms() {
        let x = Poly::var(2, 0);
        let p = x.add(&x.scale(-1.0));
        assert!(p.is_zero());
        assert_eq!(p.total_degree(), None);
    }

    #[test]
    fn laplacian_kills_low_degree() {
        let lin = Poly::linear(&[3.0, -1.0]);
        assert!(lin.laplacian().is_zero());
        assert!(Poly::constant(2, 5.0).laplacian().is_zero());
    }
}
