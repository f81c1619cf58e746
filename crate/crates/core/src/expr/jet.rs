use nalgebra::Matrix3;

use super::{DomainKind, Scalar};
use crate::Vec3;

/// Second-order forward-mode jet: value, gradient and symmetric Hessian.
///
/// The Hessian is stored as its upper triangle in the order
/// `(0,0) (0,1) (0,2) (1,1) (1,2) (2,2)`, so symmetry is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 6],
}

const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[inline]
fn upper_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

impl Jet2 {
    pub fn constant(c: f64) -> Self {
        Jet2 { value: c, grad: [0.0; 3], hess: [0.0; 6] }
    }

    pub fn variable(v: f64, index: usize) -> Self {
        let mut j = Jet2::constant(v);
        j.grad[index] = 1.0;
        j
    }

    pub fn gradient(&self) -> Vec3 {
        Vec3::new(self.grad[0], self.grad[1], self.grad[2])
    }

    pub fn hessian(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.hess[upper_index(i, j)])
    }

    pub fn hessian_entry(&self, i: usize, j: usize) -> f64 {
        self.hess[upper_index(i, j)]
    }

    /// Zero the derivative components of unused trailing variables.
    pub(super) fn truncate_to(&mut self, arity: usize) {
        for i in arity..3 {
            self.grad[i] = 0.0;
        }
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            if i >= arity || j >= arity {
                self.hess[k] = 0.0;
            }
        }
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value`.
    fn chain(self, g0: f64, g1: f64, g2: f64) -> Self {
        let mut out = Jet2 { value: g0, grad: [0.0; 3], hess: [0.0; 6] };
        for i in 0..3 {
            out.grad[i] = g1 * self.grad[i];
        }
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            out.hess[k] = g1 * self.hess[k] + g2 * self.grad[i] * self.grad[j];
        }
        out
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64) -> Self {
        Jet2::constant(c)
    }

    fn neg(self) -> Self {
        Jet2 {
            value: -self.value,
            grad: self.grad.map(|g| -g),
            hess: self.hess.map(|h| -h),
        }
    }

    fn add(self, o: Self) -> Self {
        let mut r = self;
        r.value += o.value;
        for i in 0..3 {
            r.grad[i] += o.grad[i];
        }
        for k in 0..6 {
            r.hess[k] += o.hess[k];
        }
        r
    }

    fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    fn mul(self, o: Self) -> Self {
        let mut r = Jet2::constant(self.value * o.value);
        for i in 0..3 {
            r.grad[i] = self.grad[i] * o.value + self.value * o.grad[i];
        }
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            r.hess[k] = self.hess[k] * o.value
                + self.value * o.hess[k]
                + self.grad[i] * o.grad[j]
                + self.grad[j] * o.grad[i];
        }
        r
    }

    fn div(self, o: Self) -> Result<Self, DomainKind> {
        if o.value == 0.0 {
            return Err(DomainKind::DivisionByZero);
        }
        let v = o.value;
        let recip = o.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
        Ok(self.mul(recip))
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    fn sqrt(self) -> Result<Self, DomainKind> {
        if self.value < 0.0 {
            return Err(DomainKind::SqrtOfNegative);
        }
        if self.value == 0.0 {
            return Err(DomainKind::SqrtAtZero);
        }
        let s = self.value.sqrt();
        Ok(self.chain(s, 0.5 / s, -0.25 / (s * self.value)))
    }
}
