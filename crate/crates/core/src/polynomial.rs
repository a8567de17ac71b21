//! Sparse polynomials in the four base coordinates x⁰..x³.
//!
//! Used for user-defined potentials and metrics and for gauge functions.
//! Derivatives are exact.

use nalgebra::{Matrix4, Vector4};

/// One term `coeff · Π (xⁱ)^exps[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub exps: [u32; 4],
}

impl Monomial {
    pub fn new(coeff: f64, exps: [u32; 4]) -> Self {
        Self { coeff, exps }
    }

    pub fn eval(&self, x: &Vector4<f64>) -> f64 {
        let mut v = self.coeff;
        for (i, &e) in self.exps.iter().enumerate() {
            if e > 0 {
                v *= x[i].powi(e as i32);
            }
        }
        v
    }

    /// ∂/∂xʲ of this term, itself a monomial (zero coefficient when the exponent is 0).
    pub fn derivative(&self, j: usize) -> Monomial {
        let e = self.exps[j];
        if e == 0 {
            return Monomial::new(0.0, [0; 4]);
        }
        let mut exps = self.exps;
        exps[j] -= 1;
        Monomial::new(self.coeff * e as f64, exps)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial4 {
    pub terms: Vec<Monomial>,
}

impl Polynomial4 {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Monomial::new(c, [0; 4])])
    }

    /// `coeff · xⁱ`
    pub fn linear(coeff: f64, i: usize) -> Self {
        let mut exps = [0; 4];
        exps[i] = 1;
        Self::new(vec![Monomial::new(coeff, exps)])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|m| m.coeff == 0.0)
    }

    pub fn eval(&self, x: &Vector4<f64>) -> f64 {
        self.terms.iter().map(|m| m.eval(x)).sum()
    }

    pub fn derivative(&self, j: usize) -> Polynomial4 {
        Polynomial4::new(
            self.terms
                .iter()
                .map(|m| m.derivative(j))
                .filter(|m| m.coeff != 0.0)
                .collect(),
        )
    }

    pub fn gradient(&self, x: &Vector4<f64>) -> Vector4<f64> {
        Vector4::from_fn(|j, _| self.derivative(j).eval(x))
    }

    /// `H[(i, j)] = ∂²f/∂xⁱ∂xʲ`
    pub fn hessian(&self, x: &Vector4<f64>) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.derivative(i).derivative(j).eval(x))
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|m| m.coeff.is_finite())
    }
}
