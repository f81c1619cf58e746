#![allow(dead_code)]

use levelcurv::{parse, ScalarField, Vec3};
use nalgebra::Matrix3;
use rand::Rng;

/// A field of the test suite together with a regular level and the ball
/// and cell size it is meshed with.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub name: &'static str,
    pub src: &'static str,
    pub arity: usize,
    pub t: f64,
    pub radius: f64,
    pub h: f64,
    pub polynomial: bool,
}

impl Case {
    pub fn field(&self) -> ScalarField {
        parse(self.src, self.arity).unwrap()
    }
}

pub const CIRCLE: Case = Case { name: "circle", src: "x^2 + y^2", arity: 2, t: 1.0, radius: 2.0, h: 0.01, polynomial: true };
pub const HYPERBOLA: Case = Case { name: "hyperbola", src: "x^2 - y^2", arity: 2, t: 1.0, radius: 5.0, h: 0.01, polynomial: true };
pub const FOLD: Case = Case {
    name: "fold",
    src: "y*(2*x^2*y^2 - 9*x*y + 12)",
    arity: 2,
    t: 0.1,
    radius: 80.0,
    h: 0.005,
    polynomial: true,
};
pub const SPHERE: Case = Case { name: "sphere", src: "x^2 + y^2 + z^2", arity: 3, t: 1.0, radius: 2.0, h: 0.05, polynomial: true };
pub const TORUS: Case = Case {
    name: "torus",
    src: "(sqrt(x^2 + y^2) - 2)^2 + z^2",
    arity: 3,
    t: 1.0,
    radius: 5.0,
    h: 0.05,
    polynomial: false,
};
pub const SADDLE: Case = Case { name: "saddle", src: "z - x^2 + y^2", arity: 3, t: 0.0, radius: 2.0, h: 0.05, polynomial: true };

pub const SUITE: [Case; 6] = [CIRCLE, HYPERBOLA, FOLD, SPHERE, TORUS, SADDLE];

pub fn random_point<R: Rng>(rng: &mut R, arity: usize, half_width: f64) -> Vec3 {
    let mut p = Vec3::zeros();
    for i in 0..arity {
        p[i] = rng.random_range(-half_width..half_width);
    }
    p
}

fn unit(i: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[i] = 1.0;
    e
}

/// Central differences of values.
pub fn fd_gradient(f: &ScalarField, x: &Vec3, h: f64) -> Vec3 {
    let mut g = Vec3::zeros();
    for i in 0..f.arity() {
        let e = unit(i) * h;
        g[i] = (f.value(&(x + e)).unwrap() - f.value(&(x - e)).unwrap()) / (2.0 * h);
    }
    g
}

/// Central differences of the AD gradient.
pub fn fd_hessian(f: &ScalarField, x: &Vec3, h: f64) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for j in 0..f.arity() {
        let e = unit(j) * h;
        let d = (f.eval2(&(x + e)).unwrap().gradient() - f.eval2(&(x - e)).unwrap().gradient()) / (2.0 * h);
        for i in 0..f.arity() {
            m[(i, j)] = d[i];
        }
    }
    m
}

/// `|a − b| / max(|b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
