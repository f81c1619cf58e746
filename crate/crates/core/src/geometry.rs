//! Pointwise differential geometry of the level through a point: Gauss map
//! `ν_f = ∇f/|∇f|`, its differential, the shape operator in an orthonormal
//! tangent frame, Gauss curvature, tangent Gauss index and Lipschitz–Killing
//! densities.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::expr::{ExprError, Jet2, ScalarField};
use crate::Vec3;

/// Relative gradient floor: `|∇f(x)| < GRAD_FLOOR_REL·(1 + |x|)` puts `x` in
/// the critical set.
pub const GRAD_FLOOR_REL: f64 = 1e-8;

/// Relative threshold under which a principal curvature counts as zero.
pub const EIGEN_ZERO_REL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("near-critical point: |grad f| = {grad_norm:e} is below the floor {floor:e}")]
    NearCritical { grad_norm: f64, floor: f64 },
    #[error("Lipschitz-Killing order q = {q} outside 1..={max}")]
    OrderOutOfRange { q: usize, max: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub fn grad_floor(x: &Vec3) -> f64 {
    GRAD_FLOOR_REL * (1.0 + x.norm())
}

/// Orthonormal frame `(v_1, …, v_{n-1}, ν)` at a point of a level set,
/// positively oriented in Rⁿ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame {
    pub base_point: Vec3,
    pub normal: Vec3,
    pub tangents: [Vec3; 2],
    /// Number of tangent vectors in use (n − 1).
    pub dim: usize,
}

impl TangentFrame {
    /// Deterministic frame: for n = 3 Gram–Schmidt on the two coordinate
    /// axes least aligned with `normal`; for n = 2 the normal rotated by −90°.
    pub fn new(base_point: Vec3, normal: Vec3, arity: usize) -> Self {
        if arity == 2 {
            let t = Vec3::new(normal.y, -normal.x, 0.0);
            return TangentFrame { base_point, normal, tangents: [t, Vec3::zeros()], dim: 1 };
        }
        let mut axes = [0usize, 1, 2];
        axes.sort_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()));
        let a = Vec3::ith(axes[0], 1.0);
        let b = Vec3::ith(axes[1], 1.0);
        let e1 = (a - normal * a.dot(&normal)).normalize();
        let mut e2 = b - normal * b.dot(&normal);
        e2 = (e2 - e1 * e2.dot(&e1)).normalize();
        let (e1, e2) = if e1.cross(&e2).dot(&normal) < 0.0 { (e2, e1) } else { (e1, e2) };
        TangentFrame { base_point, normal, tangents: [e1, e2], dim: 2 }
    }

    /// Same normal, tangent basis rotated by `angle` inside the tangent plane
    /// (n = 3 only; the planar frame is unique).
    pub fn rotated(&self, angle: f64) -> Self {
        if self.dim < 2 {
            return *self;
        }
        let (s, c) = angle.sin_cos();
        let [e1, e2] = self.tangents;
        TangentFrame { tangents: [e1 * c + e2 * s, e2 * c - e1 * s], ..*self }
    }

    pub fn tangent_basis(&self) -> &[Vec3] {
        &self.tangents[..self.dim]
    }
}

/// Curvature data of the level through a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCurvature {
    /// Size of the shape matrix (n − 1).
    pub dim: usize,
    /// Shape operator in the tangent frame, units 1/length.
    pub shape: [[f64; 2]; 2],
    /// Principal curvatures sorted ascending; only `dim` entries are used.
    pub principal: [f64; 2],
    /// Gauss–Kronecker curvature `det(shape)`.
    pub gauss: f64,
    /// Number of negative principal curvatures.
    pub index: u8,
    pub degenerate: bool,
}

impl PointCurvature {
    pub fn principal(&self) -> &[f64] {
        &self.principal[..self.dim]
    }

    fn from_shape(shape: [[f64; 2]; 2], dim: usize) -> Self {
        let (principal, gauss) = if dim == 1 {
            ([shape[0][0], 0.0], shape[0][0])
        } else {
            let (a, b, d) = (shape[0][0], 0.5 * (shape[0][1] + shape[1][0]), shape[1][1]);
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            ([mean - r, mean + r], a * d - b * b)
        };
        let p = &principal[..dim];
        let radius = p.iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let tol = EIGEN_ZERO_REL * radius.max(1.0);
        let degenerate = p.iter().any(|k| k.abs() < tol);
        let index = p.iter().filter(|k| **k < 0.0).count() as u8;
        PointCurvature { dim, shape, principal, gauss, index, degenerate }
    }
}

/// Everything computed at one point from a single jet evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PointGeometry {
    pub jet: Jet2,
    pub grad_norm: f64,
    pub frame: TangentFrame,
    pub curvature: PointCurvature,
}

impl PointGeometry {
    pub fn at(field: &ScalarField, x: &Vec3) -> Result<Self, GeometryError> {
        let jet = field.eval2(x)?;
        let grad = jet.gradient();
        let grad_norm = grad.norm();
        let floor = grad_floor(x);
        if grad_norm < floor {
            return Err(GeometryError::NearCritical { grad_norm, floor });
        }
        let frame = TangentFrame::new(*x, grad / grad_norm, field.arity());
        let curvature = shape_in_frame(&jet.hessian(), grad_norm, &frame);
        Ok(PointGeometry { jet, grad_norm, frame, curvature })
    }

    pub fn normal(&self) -> Vec3 {
        self.frame.normal
    }
}

fn shape_in_frame(hess: &Matrix3<f64>, grad_norm: f64, frame: &TangentFrame) -> PointCurvature {
    let mut shape = [[0.0; 2]; 2];
    let basis = frame.tangent_basis();
    for (i, ei) in basis.iter().enumerate() {
        let he = hess * ei;
        for (j, ej) in basis.iter().enumerate() {
            shape[j][i] = he.dot(ej) / grad_norm;
        }
    }
    PointCurvature::from_shape(shape, frame.dim)
}

fn checked_gradient(field: &ScalarField, x: &Vec3) -> Result<(Jet2, f64), GeometryError> {
    let jet = field.eval2(x)?;
    let grad_norm = jet.gradient().norm();
    let floor = grad_floor(x);
    if grad_norm < floor {
        return Err(GeometryError::NearCritical { grad_norm, floor });
    }
    Ok((jet, grad_norm))
}

/// `ν_f(x) = ∇f(x)/|∇f(x)|`.
pub fn gauss_map(field: &ScalarField, x: &Vec3) -> Result<Vec3, GeometryError> {
    let (jet, norm) = checked_gradient(field, x)?;
    Ok(jet.gradient() / norm)
}

/// `d_xν_f·ξ = (Hξ − ⟨Hξ, ν⟩ν)/|∇f|`.
pub fn gauss_differential(field: &ScalarField, x: &Vec3, xi: &Vec3) -> Result<Vec3, GeometryError> {
    let (jet, norm) = checked_gradient(field, x)?;
    let nu = jet.gradient() / norm;
    let hx = jet.hessian() * xi;
    Ok((hx - nu * hx.dot(&nu)) / norm)
}

pub fn shape_operator(field: &ScalarField, x: &Vec3) -> Result<PointCurvature, GeometryError> {
    Ok(PointGeometry::at(field, x)?.curvature)
}

/// Shape operator expressed in a caller-supplied frame at `x`.
pub fn shape_operator_in_frame(
    field: &ScalarField,
    frame: &TangentFrame,
) -> Result<PointCurvature, GeometryError> {
    let (jet, norm) = checked_gradient(field, &frame.base_point)?;
    Ok(shape_in_frame(&jet.hessian(), norm, frame))
}

/// Lipschitz–Killing density of order `q` from principal curvatures, with
/// the Grassmannian measure taken as arc length on the unit circle
/// (`c_{n,q} = 1`).
pub fn lk_from_curvature(curv: &PointCurvature, q: usize) -> Result<f64, GeometryError> {
    let max = curv.dim;
    if q == 0 || q > max {
        return Err(GeometryError::OrderOutOfRange { q, max });
    }
    if q == max {
        return Ok(curv.gauss);
    }
    // n = 3, q = 1: ∫₀^{2π} (κ₁cos²θ + κ₂sin²θ) dθ.
    Ok(PI * (curv.principal[0] + curv.principal[1]))
}

pub fn lk_density(field: &ScalarField, x: &Vec3, q: usize) -> Result<f64, GeometryError> {
    lk_from_curvature(&shape_operator(field, x)?, q)
}

/// `Ψ_f(x) = (ν_f(x), f(x))`.
pub fn psi(field: &ScalarField, x: &Vec3) -> Result<(Vec3, f64), GeometryError> {
    let (jet, norm) = checked_gradient(field, x)?;
    Ok((jet.gradient() / norm, jet.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v2(x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, 0.0)
    }

    #[test]
    fn gauss_map_examples() {
        let s = parse("x^2+y^2+z^2", 3).unwrap();
        assert_eq!(gauss_map(&s, &Vec3::new(1.0, 0.0, 0.0)).unwrap(), Vec3::new(1.0, 0.0, 0.0));
        let c = parse("x^2+y^2", 2).unwrap();
        assert_eq!(gauss_map(&c, &v2(0.0, 2.0)).unwrap(), v2(0.0, 1.0));
        // Hand derivative: ∇f = (4xy³ − 9y², 6x²y² − 18xy + 12) = (−9, 12) at (0, 1).
        let p = parse("y*(2*x^2*y^2 - 9*x*y + 12)", 2).unwrap();
        let nu = gauss_map(&p, &v2(0.0, 1.0)).unwrap();
        assert_relative_eq!(nu, v2(-0.6, 0.8), epsilon = 1e-15);
    }

    #[test]
    fn critical_points_are_rejected() {
        let c = parse("x^2+y^2", 2).unwrap();
        assert!(matches!(gauss_map(&c, &v2(0.0, 0.0)), Err(GeometryError::NearCritical { .. })));
        assert!(matches!(shape_operator(&c, &v2(1e-10, 0.0)), Err(GeometryError::NearCritical { .. })));
    }

    #[test]
    fn differential_examples() {
        let c = parse("x^2+y^2", 2).unwrap();
        let d = gauss_differential(&c, &v2(1.0, 0.0), &v2(0.0, 1.0)).unwrap();
        assert_relative_eq!(d, v2(0.0, 1.0), epsilon = 1e-15);
        let s = parse("x^2+y^2+z^2", 3).unwrap();
        let d = gauss_differential(&s, &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(d, Vec3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn differential_is_tangent() {
        let fields = [
            parse("y*(2*x^2*y^2 - 9*x*y + 12)", 2).unwrap(),
            parse("(sqrt(x^2+y^2) - 2)^2 + z^2", 3).unwrap(),
            parse("z - x^2 + y^2", 3).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in &fields {
            for _ in 0..200 {
                let mut x = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0);
                let mut xi = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
                if f.arity() == 3 {
                    x.z = rng.random_range(-2.0..2.0);
                    xi.z = rng.random_range(-1.0..1.0);
                }
                let (Ok(nu), Ok(d)) = (gauss_map(f, &x), gauss_differential(f, &x, &xi)) else {
                    continue;
                };
                assert!(d.dot(&nu).abs() < 1e-10 * (1.0 + d.norm()));
            }
        }
    }

    #[test]
    fn shape_operator_examples() {
        let s = parse("x^2+y^2+z^2", 3).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let pc = shape_operator(&s, &Vec3::new(0.3 * r, -0.4 * r, (0.75f64).sqrt() * r)).unwrap();
            assert_relative_eq!(pc.principal[0], 1.0 / r, epsilon = 1e-12);
            assert_relative_eq!(pc.principal[1], 1.0 / r, epsilon = 1e-12);
            assert_relative_eq!(pc.gauss, 1.0 / (r * r), epsilon = 1e-12);
            assert_eq!(pc.index, 0);
            assert!(!pc.degenerate);
        }

        let saddle = parse("z - x^2 + y^2", 3).unwrap();
        let pc = shape_operator(&saddle, &Vec3::zeros()).unwrap();
        assert_relative_eq!(pc.principal[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(pc.principal[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(pc.gauss, -4.0, epsilon = 1e-12);
        assert_eq!(pc.index, 1);

        let c = parse("x^2+y^2", 2).unwrap();
        let pc = shape_operator(&c, &v2(1.0, 0.0)).unwrap();
        assert_eq!(pc.dim, 1);
        assert_relative_eq!(pc.shape[0][0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(pc.gauss, 1.0, epsilon = 1e-15);
        assert_eq!(pc.index, 0);
    }

    /// The saddle level z = x² − y² written as a graph, differentiated by
    /// central differences of the height along its upward unit normal.
    #[test]
    fn saddle_matches_graph_finite_differences() {
        let h = 1e-4;
        let height = |x: f64, y: f64| x * x - y * y;
        let fxx = (height(h, 0.0) - 2.0 * height(0.0, 0.0) + height(-h, 0.0)) / (h * h);
        let fyy = (height(0.0, h) - 2.0 * height(0.0, 0.0) + height(0.0, -h)) / (h * h);
        // ν = ∇(z − x² + y²) points to +z, the side the graph curves away from,
        // so the shape operator is −Hess(height).
        let saddle = parse("z - x^2 + y^2", 3).unwrap();
        let pc = shape_operator(&saddle, &Vec3::zeros()).unwrap();
        let mut fd = [-fxx, -fyy];
        fd.sort_by(f64::total_cmp);
        assert_relative_eq!(pc.principal[0], fd[0], epsilon = 1e-6);
        assert_relative_eq!(pc.principal[1], fd[1], epsilon = 1e-6);
    }

    #[test]
    fn frame_is_orthonormal_and_oriented() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                .normalize();
            let fr = TangentFrame::new(Vec3::zeros(), n, 3);
            let [e1, e2] = fr.tangents;
            assert!((e1.norm() - 1.0).abs() < 1e-12 && (e2.norm() - 1.0).abs() < 1e-12);
            assert!(e1.dot(&e2).abs() < 1e-10 && e1.dot(&n).abs() < 1e-10 && e2.dot(&n).abs() < 1e-10);
            assert!(e1.cross(&e2).dot(&n) > 0.0);
        }
        let fr = TangentFrame::new(Vec3::zeros(), v2(0.6, 0.8), 2);
        let t = fr.tangents[0];
        assert!((t.x * fr.normal.y - t.y * fr.normal.x) > 0.0);
    }

    #[test]
    fn lk_examples() {
        let s = parse("x^2+y^2+z^2", 3).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let x = Vec3::new(0.0, 0.0, r);
            assert_relative_eq!(lk_density(&s, &x, 1).unwrap(), 2.0 * PI / r, epsilon = 1e-12);
            let pc = shape_operator(&s, &x).unwrap();
            assert_eq!(lk_density(&s, &x, 2).unwrap(), pc.gauss);
        }
        let saddle = parse("z - x^2 + y^2", 3).unwrap();
        assert!(lk_density(&saddle, &Vec3::zeros(), 1).unwrap().abs() < 1e-12);
        assert!(matches!(
            lk_density(&saddle, &Vec3::zeros(), 3),
            Err(GeometryError::OrderOutOfRange { q: 3, max: 2 })
        ));
        let c = parse("x^2+y^2", 2).unwrap();
        assert!(lk_density(&c, &v2(1.0, 0.0), 2).is_err());
    }

    #[test]
    fn psi_examples() {
        let c = parse("x^2+y^2", 2).unwrap();
        assert_eq!(psi(&c, &v2(0.0, 2.0)).unwrap(), (v2(0.0, 1.0), 4.0));
        let s = parse("x^2+y^2+z^2", 3).unwrap();
        let x = Vec3::new(1.0, 0.0, 0.0);
        let (nu, value) = psi(&s, &x).unwrap();
        assert_eq!(nu, x);
        assert_eq!(value, s.eval2(&x).unwrap().value);
    }

    #[test]
    fn frame_independence() {
        let torus = parse("(sqrt(x^2+y^2) - 2)^2 + z^2", 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = Vec3::new(rng.random_range(0.5..3.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let g = PointGeometry::at(&torus, &x).unwrap();
            let fr = g.frame.rotated(rng.random_range(0.0..std::f64::consts::TAU));
            let pc = shape_operator_in_frame(&torus, &fr).unwrap();
            let scale = 1.0 + g.curvature.principal[1].abs();
            assert!((pc.gauss - g.curvature.gauss).abs() < 1e-9 * scale * scale);
            for k in 0..2 {
                assert!((pc.principal[k] - g.curvature.principal[k]).abs() < 1e-9 * scale);
            }
        }
    }
}
