//! The 4-potential, the Faraday tensor and the metric of the distribution.
//!
//! The distribution is the kernel of `ω = Σ Aᵢ dxⁱ + dx⁴`, spanned by the
//! frame `eᵢ = ∂ᵢ − Aᵢ ∂₄`. Nothing here depends on the fiber coordinate x⁴:
//! fields are functions of x⁰..x³ only, so cylindricity holds by construction.
//!
//! Sign convention for F follows the matrix
//!
//! ```text
//!   0    Ex   Ey   Ez
//!  -Ex   0   -Hz   Hy
//!  -Ey   Hz   0   -Hx
//!  -Ez  -Hy   Hx   0
//! ```
//!
//! with `F_jk = ∂A_k/∂xʲ − ∂A_j/∂xᵏ`. Textbooks differ by a sign on H.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::error::{Error, Result};
use crate::polynomial::Polynomial4;

/// Default central-difference step, relative to `max(1, |xᵏ|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Relative determinant threshold below which a metric counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Relative tolerance used when checking metric symmetry.
pub const SYMMETRY_TOL: f64 = 1e-14;

type VecFn = Arc<dyn Fn(&Vector4<f64>) -> Vector4<f64> + Send + Sync>;
type MatFn = Arc<dyn Fn(&Vector4<f64>) -> Matrix4<f64> + Send + Sync>;
type MetricJacFn = Arc<dyn Fn(&Vector4<f64>) -> [Matrix4<f64>; 4] + Send + Sync>;

/// A point (x⁰, x¹, x², x³) of the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacetime4Point(Vector4<f64>);

impl Spacetime4Point {
    pub fn new(x: Vector4<f64>) -> Result<Self> {
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "point",
                component: format!("x{k}"),
            });
        }
        Ok(Self(x))
    }

    pub fn from_array(x: [f64; 4]) -> Result<Self> {
        Self::new(Vector4::from(x))
    }

    pub fn origin() -> Self {
        Self(Vector4::zeros())
    }

    pub fn coords(&self) -> &Vector4<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }
}

/// A point of the 5-manifold: base point plus fiber coordinate x⁴.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event5 {
    pub base: Spacetime4Point,
    pub fiber: f64,
}

impl Event5 {
    pub fn new(base: Spacetime4Point, fiber: f64) -> Result<Self> {
        if !fiber.is_finite() {
            return Err(Error::NonFinite {
                what: "event",
                component: "x4".into(),
            });
        }
        Ok(Self { base, fiber })
    }

    pub fn origin() -> Self {
        Self {
            base: Spacetime4Point::origin(),
            fiber: 0.0,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        let b = self.base.coords();
        [b[0], b[1], b[2], b[3], self.fiber]
    }
}

fn fd_increment(x: f64, fd_step: f64) -> (f64, f64, f64) {
    let h = fd_step * x.abs().max(1.0);
    let xp = x + h;
    let xm = x - h;
    (xp, xm, xp - xm)
}

/// The covector field A₀..A₃ with optional analytic Jacobian.
#[derive(Clone)]
pub struct PotentialField {
    eval: VecFn,
    jacobian: Option<MatFn>,
    fd_step: f64,
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialField")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl PotentialField {
    pub fn from_fn<F>(eval: F) -> Self
    where
        F: Fn(&Vector4<f64>) -> Vector4<f64> + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            jacobian: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    /// Attach an analytic Jacobian, `J[(k, j)] = ∂A_k/∂xʲ`.
    pub fn with_jacobian<F>(mut self, jacobian: F) -> Self
    where
        F: Fn(&Vector4<f64>) -> Matrix4<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        if !(fd_step > 0.0 && fd_step.is_finite()) {
            return Err(Error::Domain(format!("fd_step must be > 0, got {fd_step}")));
        }
        self.fd_step = fd_step;
        Ok(self)
    }

    pub fn zero() -> Self {
        Self::from_fn(|_| Vector4::zeros()).with_jacobian(|_| Matrix4::zeros())
    }

    /// `A = (0, 0, φ x³, 0)`: constant H_x = φ, F₂₃ = −φ.
    pub fn constant_magnetic(phi: f64) -> Self {
        Self::from_fn(move |x| Vector4::new(0.0, 0.0, phi * x[3], 0.0)).with_jacobian(move |_| {
            let mut j = Matrix4::zeros();
            j[(2, 3)] = phi;
            j
        })
    }

    /// `A = (−E x¹, 0, 0, 0)`: constant E_x = E.
    pub fn constant_electric(e: f64) -> Self {
        Self::from_fn(move |x| Vector4::new(-e * x[1], 0.0, 0.0, 0.0)).with_jacobian(move |_| {
            let mut j = Matrix4::zeros();
            j[(0, 1)] = -e;
            j
        })
    }

    /// Linear potential `A_k = Σ_j m[(k, j)] xʲ`; its field is `F_jk = m[(k,j)] − m[(j,k)]`.
    pub fn linear(m: Matrix4<f64>) -> Self {
        Self::from_fn(move |x| m * x).with_jacobian(move |_| m)
    }

    /// The potential with constant field `f` in symmetric gauge, `A_k = ½ Σ_j F_jk xʲ`.
    pub fn uniform_field(f: &FaradayTensor) -> Self {
        Self::linear(f.matrix().transpose() * 0.5)
    }

    pub fn polynomial(components: [Polynomial4; 4]) -> Self {
        let comps = Arc::new(components);
        let c2 = Arc::clone(&comps);
        Self::from_fn(move |x| Vector4::from_fn(|k, _| comps[k].eval(x)))
            .with_jacobian(move |x| Matrix4::from_fn(|k, j| c2[k].derivative(j).eval(x)))
    }

    /// The gauge-transformed potential `A + ∇f`.
    pub fn gauge_shifted(&self, f: &Polynomial4) -> Self {
        let base = Arc::clone(&self.eval);
        let f1 = f.clone();
        let mut shifted = Self::from_fn(move |x| base(x) + f1.gradient(x));
        shifted.fd_step = self.fd_step;
        if let Some(jac) = &self.jacobian {
            let jac = Arc::clone(jac);
            let f2 = f.clone();
            shifted = shifted.with_jacobian(move |x| jac(x) + f2.hessian(x));
        }
        shifted
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn value(&self, x: &Vector4<f64>) -> Vector4<f64> {
        (self.eval)(x)
    }

    /// Central-difference Jacobian, ignoring any analytic one.
    pub fn fd_jacobian(&self, x: &Vector4<f64>) -> Matrix4<f64> {
        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let (xp, xm, dx) = fd_increment(x[j], self.fd_step);
            let mut plus = *x;
            let mut minus = *x;
            plus[j] = xp;
            minus[j] = xm;
            let d = (self.value(&plus) - self.value(&minus)) / dx;
            jac.set_column(j, &d);
        }
        jac
    }

    /// `J[(k, j)] = ∂A_k/∂xʲ`, analytic when available.
    pub fn jacobian_at(&self, x: &Vector4<f64>) -> Result<Matrix4<f64>> {
        let jac = match &self.jacobian {
            Some(f) => f(x),
            None => self.fd_jacobian(x),
        };
        for k in 0..4 {
            for j in 0..4 {
                if !jac[(k, j)].is_finite() {
                    return Err(Error::NonFinite {
                        what: "potential derivative",
                        component: format!("dA{k}/dx{j}"),
                    });
                }
            }
        }
        Ok(jac)
    }
}

/// Antisymmetric field-strength tensor `F_jk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaradayTensor(Matrix4<f64>);

impl FaradayTensor {
    pub fn zero() -> Self {
        Self(Matrix4::zeros())
    }

    /// From `d[(j, k)] = ∂A_k/∂xʲ`: `F_jk = d[(j,k)] − d[(k,j)]`.
    pub fn from_derivatives(d: &Matrix4<f64>) -> Self {
        Self(Matrix4::from_fn(|j, k| d[(j, k)] - d[(k, j)]))
    }

    /// Takes the strict upper triangle of `m` and mirrors it with a sign flip.
    pub fn from_upper(m: &Matrix4<f64>) -> Self {
        Self(Matrix4::from_fn(|j, k| match j.cmp(&k) {
            std::cmp::Ordering::Less => m[(j, k)],
            std::cmp::Ordering::Greater => -m[(k, j)],
            std::cmp::Ordering::Equal => 0.0,
        }))
    }

    /// Builds F from the electric and magnetic 3-vectors.
    pub fn from_fields(e: [f64; 3], h: [f64; 3]) -> Self {
        let [ex, ey, ez] = e;
        let [hx, hy, hz] = h;
        #[rustfmt::skip]
        let upper = Matrix4::new(
            0.0, ex,  ey,  ez,
            0.0, 0.0, -hz, hy,
            0.0, 0.0, 0.0, -hx,
            0.0, 0.0, 0.0, 0.0,
        );
        Self::from_upper(&upper)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }

    pub fn electric(&self) -> [f64; 3] {
        [self.0[(0, 1)], self.0[(0, 2)], self.0[(0, 3)]]
    }

    pub fn magnetic(&self) -> [f64; 3] {
        [self.0[(3, 2)], self.0[(1, 3)], self.0[(2, 1)]]
    }

    /// Mixed tensor `Fᵏⱼ = Σ_l g^{kl} F_lj`.
    pub fn raised(&self, g_inv: &Matrix4<f64>) -> Matrix4<f64> {
        g_inv * self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

/// Faraday tensor of `potential` at `x`.
pub fn faraday(potential: &PotentialField, x: &Spacetime4Point) -> Result<FaradayTensor> {
    let jac = potential.jacobian_at(x.coords())?;
    Ok(FaradayTensor::from_derivatives(&jac.transpose()))
}

/// Metric `g_ij(x)` on the distribution, in the frame e₀..e₃.
#[derive(Clone)]
pub struct DistributionMetric {
    eval: MatFn,
    jacobian: Option<MetricJacFn>,
    fd_step: f64,
    /// Validated value and inverse of a constant metric.
    constant: Option<(Matrix4<f64>, Matrix4<f64>)>,
}

impl fmt::Debug for DistributionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionMetric")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("fd_step", &self.fd_step)
            .field("constant", &self.constant.is_some())
            .finish()
    }
}

fn check_symmetric(g: &Matrix4<f64>) -> Result<()> {
    for i in 0..4 {
        for j in (i + 1)..4 {
            let (a, b) = (g[(i, j)], g[(j, i)]);
            if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::NotSymmetric { i, j, a, b });
            }
        }
    }
    Ok(())
}

/// Counts (positive, negative) eigenvalues; `None` if any is numerically zero.
pub fn signature(g: &Matrix4<f64>) -> Option<(usize, usize)> {
    let eig = SymmetricEigen::new(*g);
    let scale = eig.eigenvalues.amax();
    if scale == 0.0 {
        return None;
    }
    let mut pos = 0;
    let mut neg = 0;
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= DEGENERACY_TOL * scale {
            return None;
        } else if l > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    Some((pos, neg))
}

impl DistributionMetric {
    pub fn from_fn<F>(eval: F) -> Self
    where
        F: Fn(&Vector4<f64>) -> Matrix4<f64> + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            jacobian: None,
            fd_step: DEFAULT_FD_STEP,
            constant: None,
        }
    }

    /// Attach analytic derivatives: element `k` is `∂g/∂xᵏ`.
    pub fn with_jacobian<F>(mut self, jacobian: F) -> Self
    where
        F: Fn(&Vector4<f64>) -> [Matrix4<f64>; 4] + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        if !(fd_step > 0.0 && fd_step.is_finite()) {
            return Err(Error::Domain(format!("fd_step must be > 0, got {fd_step}")));
        }
        self.fd_step = fd_step;
        Ok(self)
    }

    /// `diag(1, −1, −1, −1)`
    pub fn minkowski() -> Self {
        Self::constant(Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0)))
            .expect("minkowski metric is valid")
    }

    /// A constant metric, validated for symmetry, nondegeneracy and signature.
    pub fn constant(g: Matrix4<f64>) -> Result<Self> {
        validate(&g, &Vector4::zeros())?;
        let inv = g.try_inverse().ok_or(Error::Degenerate {
            point: [0.0; 4],
            det: g.determinant(),
        })?;
        let mut m = Self::from_fn(move |_| g).with_jacobian(|_| [Matrix4::zeros(); 4]);
        m.constant = Some((g, inv));
        Ok(m)
    }

    /// Metric with polynomial entries; `entries[i][j]` for `i ≤ j` is used and mirrored.
    pub fn polynomial(entries: [[Polynomial4; 4]; 4]) -> Self {
        let entries = Arc::new(entries);
        let e2 = Arc::clone(&entries);
        let pick = |i: usize, j: usize| if i <= j { (i, j) } else { (j, i) };
        Self::from_fn(move |x| {
            Matrix4::from_fn(|i, j| {
                let (a, b) = pick(i, j);
                entries[a][b].eval(x)
            })
        })
        .with_jacobian(move |x| {
            std::array::from_fn(|k| {
                Matrix4::from_fn(|i, j| {
                    let (a, b) = pick(i, j);
                    e2[a][b].derivative(k).eval(x)
                })
            })
        })
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Raw evaluation, no validation.
    pub fn value(&self, x: &Vector4<f64>) -> Matrix4<f64> {
        (self.eval)(x)
    }

    /// Evaluation with symmetry, nondegeneracy and (+,−,−,−) signature checks.
    pub fn checked(&self, x: &Vector4<f64>) -> Result<Matrix4<f64>> {
        if let Some((g, _)) = self.constant {
            return Ok(g);
        }
        let g = self.value(x);
        validate(&g, x)?;
        Ok(g)
    }

    /// Validated metric and its inverse.
    pub fn with_inverse(&self, x: &Vector4<f64>) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
        if let Some(pair) = self.constant {
            return Ok(pair);
        }
        let g = self.checked(x)?;
        let inv = g.try_inverse().ok_or(Error::Degenerate {
            point: [x[0], x[1], x[2], x[3]],
            det: g.determinant(),
        })?;
        Ok((g, inv))
    }

    /// Central-difference derivatives, ignoring any analytic ones.
    pub fn fd_jacobian(&self, x: &Vector4<f64>) -> [Matrix4<f64>; 4] {
        std::array::from_fn(|k| {
            let (xp, xm, dx) = fd_increment(x[k], self.fd_step);
            let mut plus = *x;
            let mut minus = *x;
            plus[k] = xp;
            minus[k] = xm;
            (self.value(&plus) - self.value(&minus)) / dx
        })
    }

    /// `∂g/∂xᵏ` for k = 0..3, analytic when available.
    pub fn jacobian_at(&self, x: &Vector4<f64>) -> Result<[Matrix4<f64>; 4]> {
        let jac = match &self.jacobian {
            Some(f) => f(x),
            None => self.fd_jacobian(x),
        };
        for (k, m) in jac.iter().enumerate() {
            if let Some(idx) = m.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "metric derivative",
                    component: format!("dg{}{}/dx{k}", idx % 4, idx / 4),
                });
            }
        }
        Ok(jac)
    }
}

fn validate(g: &Matrix4<f64>, x: &Vector4<f64>) -> Result<()> {
    let point = [x[0], x[1], x[2], x[3]];
    if let Some(idx) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "metric",
            component: format!("g{}{}", idx % 4, idx / 4),
        });
    }
    check_symmetric(g)?;
    let det = g.determinant();
    let scale = g.amax();
    if scale == 0.0 || det.abs() <= DEGENERACY_TOL * scale.powi(4) {
        return Err(Error::Degenerate { point, det });
    }
    match signature(g) {
        Some((1, 3)) => Ok(()),
        Some((positive, negative)) => Err(Error::Signature {
            point,
            positive,
            negative,
        }),
        None => Err(Error::Degenerate { point, det }),
    }
}

/// The distribution: potential (defines ω and the frame) plus its metric.
#[derive(Debug, Clone)]
pub struct FramedDistribution {
    pub potential: PotentialField,
    pub metric: DistributionMetric,
}

impl FramedDistribution {
    pub fn new(potential: PotentialField, metric: DistributionMetric) -> Self {
        Self { potential, metric }
    }

    /// Constant magnetic field φ on the flat metric.
    pub fn flat_magnetic(phi: f64) -> Self {
        Self::new(
            PotentialField::constant_magnetic(phi),
            DistributionMetric::minkowski(),
        )
    }
}

/// `ω(v) = Σ Aᵢ vⁱ + v⁴`; zero means `v` is horizontal.
pub fn horizontality_defect(potential: &PotentialField, x: &Event5, v5: &[f64; 5]) -> f64 {
    let u = Vector4::new(v5[0], v5[1], v5[2], v5[3]);
    potential.value(x.base.coords()).dot(&u) + v5[4]
}

/// Fiber velocity `dx⁴/dt = −Σ A_j uʲ` making `(u, dx⁴/dt)` horizontal.
pub fn lift_velocity(potential: &PotentialField, x: &Spacetime4Point, u: &Vector4<f64>) -> f64 {
    -potential.value(x.coords()).dot(u)
}

/// Quadratic form `Σ g_ij uⁱ uʲ` (signed, no square root).
pub fn pseudonorm(metric: &DistributionMetric, x: &Spacetime4Point, u: &Vector4<f64>) -> f64 {
    quadratic_form(&metric.value(x.coords()), u)
}

pub(crate) fn quadratic_form(g: &Matrix4<f64>, u: &Vector4<f64>) -> f64 {
    (g * u).dot(u)
}

/// Causal character of a velocity with respect to the future cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeClass {
    TimelikeFuture,
    NullFuture,
    Spacelike,
    Past,
    Zero,
}

pub fn cone_membership(
    metric: &DistributionMetric,
    x: &Spacetime4Point,
    u: &Vector4<f64>,
) -> ConeClass {
    if u.iter().all(|&c| c == 0.0) {
        return ConeClass::Zero;
    }
    let g = metric.value(x.coords());
    let q = quadratic_form(&g, u);
    let tol = 1e-14 * g.amax() * u.norm_squared();
    if q < -tol {
        ConeClass::Spacelike
    } else if u[0] > 0.0 {
        if q > tol {
            ConeClass::TimelikeFuture
        } else {
            ConeClass::NullFuture
        }
    } else {
        ConeClass::Past
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Monomial;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pt(x: [f64; 4]) -> Spacetime4Point {
        Spacetime4Point::from_array(x).unwrap()
    }

    /// Independent central-difference oracle, fixed absolute step.
    fn oracle_faraday(a: &dyn Fn(&Vector4<f64>) -> Vector4<f64>, x: &Vector4<f64>) -> Matrix4<f64> {
        let h = 1e-5;
        let mut d = Matrix4::zeros(); // d[(j,k)] = dA_k/dx^j
        for j in 0..4 {
            let mut p = *x;
            let mut m = *x;
            p[j] += h;
            m[j] -= h;
            let col = (a(&p) - a(&m)) / (2.0 * h);
            for k in 0..4 {
                d[(j, k)] = col[k];
            }
        }
        d - d.transpose()
    }

    #[test]
    fn rejects_non_finite_points() {
        assert!(Spacetime4Point::from_array([0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Event5::new(Spacetime4Point::origin(), f64::INFINITY).is_err());
    }

    #[test]
    fn faraday_of_zero_potential_vanishes() {
        let f = faraday(&PotentialField::zero(), &pt([1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(*f.matrix(), Matrix4::zeros());
        let f = faraday(&PotentialField::zero().without_jacobian(), &pt([1.0, 2.0, 3.0, 4.0]))
            .unwrap();
        assert_eq!(*f.matrix(), Matrix4::zeros());
    }

    #[test]
    fn faraday_constant_magnetic() {
        let f = faraday(&PotentialField::constant_magnetic(1.0), &pt([0.1, 0.2, 0.3, 0.4])).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let expected = match (j, k) {
                    (2, 3) => -1.0,
                    (3, 2) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(f.get(j, k), expected, "F[{j}][{k}]");
            }
        }
        assert_eq!(f.magnetic(), [1.0, 0.0, 0.0]);
        assert_eq!(f.electric(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn faraday_fd_matches_oracle_for_a0_equal_x1() {
        let a = |x: &Vector4<f64>| Vector4::new(x[1], 0.0, 0.0, 0.0);
        let pot = PotentialField::from_fn(a);
        let x = Vector4::new(0.3, -0.7, 0.1, 2.0);
        let f = faraday(&pot, &pt([0.3, -0.7, 0.1, 2.0])).unwrap();
        let oracle = oracle_faraday(&a, &x);
        assert_abs_diff_eq!(f.get(0, 1), -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.get(1, 0), 1.0, epsilon = 1e-9);
        for j in 0..4 {
            for k in 0..4 {
                assert_abs_diff_eq!(f.get(j, k), oracle[(j, k)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn faraday_rejects_non_finite_derivative() {
        let pot = PotentialField::from_fn(|x| Vector4::new(0.0, 0.0, x[3].sqrt(), 0.0));
        let err = faraday(&pot, &pt([0.0, 0.0, 0.0, -1.0])).unwrap_err();
        match err {
            Error::NonFinite { component, .. } => assert!(component.starts_with("dA2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn from_fields_uses_documented_layout() {
        let f = FaradayTensor::from_fields([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]);
        assert_eq!(f.get(0, 1), 1.0);
        assert_eq!(f.get(1, 2), -6.0);
        assert_eq!(f.get(1, 3), 5.0);
        assert_eq!(f.get(2, 3), -4.0);
        assert_eq!(f.electric(), [1.0, 2.0, 3.0]);
        assert_eq!(f.magnetic(), [4.0, 5.0, 6.0]);
        // det F = (E·H)²
        assert_abs_diff_eq!(f.determinant(), 32.0f64.powi(2), epsilon = 1e-9);
    }

    #[test]
    fn uniform_field_potential_reproduces_field() {
        let target = FaradayTensor::from_fields([0.3, -1.0, 2.0], [0.5, 0.25, -0.75]);
        let pot = PotentialField::uniform_field(&target);
        let f = faraday(&pot, &pt([0.4, 1.0, -2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(*f.matrix(), *target.matrix(), epsilon = 1e-15);
    }

    #[test]
    fn analytic_and_fd_agree_at_second_order() {
        let eval = |x: &Vector4<f64>| {
            Vector4::new(
                (x[1] * x[2]).sin(),
                x[0].exp() * x[3],
                x[3].cos() * x[0],
                x[1] * x[1] * x[2],
            )
        };
        let jac = |x: &Vector4<f64>| {
            let c = (x[1] * x[2]).cos();
            #[rustfmt::skip]
            let m = Matrix4::new(
                0.0, x[2] * c, x[1] * c, 0.0,
                x[0].exp() * x[3], 0.0, 0.0, x[0].exp(),
                x[3].cos(), 0.0, 0.0, -x[3].sin() * x[0],
                0.0, 2.0 * x[1] * x[2], x[1] * x[1], 0.0,
            );
            m
        };
        let x = pt([0.3, 0.8, -0.6, 1.1]);
        let analytic = faraday(&PotentialField::from_fn(eval).with_jacobian(jac), &x).unwrap();
        let err = |h: f64| {
            let pot = PotentialField::from_fn(eval).with_fd_step(h).unwrap();
            (faraday(&pot, &x).unwrap().matrix() - analytic.matrix()).amax()
        };
        let (e1, e2) = (err(2e-2), err(1e-2));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}, errors {e1:e} {e2:e}");
        assert!(err(1e-3) < 1e-5);
    }

    #[test]
    fn horizontality_examples() {
        let zero = PotentialField::zero();
        assert_eq!(horizontality_defect(&zero, &Event5::origin(), &[1.0, 0.0, 0.0, 0.0, 0.0]), 0.0);
        let mag = PotentialField::constant_magnetic(1.0);
        let x = Event5::new(pt([0.0, 0.0, 0.0, 2.0]), 0.0).unwrap();
        assert_eq!(horizontality_defect(&mag, &x, &[0.0, 0.0, 1.0, 0.0, -2.0]), 0.0);
        assert_eq!(horizontality_defect(&mag, &x, &[0.0, 0.0, 1.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn lift_examples() {
        let u = Vector4::new(0.3, -1.0, 2.0, 5.0);
        assert_eq!(lift_velocity(&PotentialField::zero(), &pt([1.0; 4]), &u), 0.0);
        let mag = PotentialField::constant_magnetic(1.0);
        let v = lift_velocity(&mag, &pt([0.0, 0.0, 0.0, 0.5]), &Vector4::new(0.0, 0.0, 1.0, 0.0));
        assert_eq!(v, -0.5);
        let ones = PotentialField::from_fn(|_| Vector4::repeat(1.0));
        assert_eq!(lift_velocity(&ones, &pt([0.0; 4]), &Vector4::repeat(1.0)), -4.0);
    }

    #[test]
    fn pseudonorm_examples() {
        let g = DistributionMetric::minkowski();
        let o = Spacetime4Point::origin();
        assert_eq!(pseudonorm(&g, &o, &Vector4::new(1.0, 0.0, 0.0, 0.0)), 1.0);
        assert_eq!(pseudonorm(&g, &o, &Vector4::new(1.0, 1.0, 0.0, 0.0)), 0.0);
        assert_eq!(pseudonorm(&g, &o, &Vector4::new(2.0, 1.0, 1.0, 1.0)), 1.0);
    }

    #[test]
    fn cone_examples() {
        let g = DistributionMetric::minkowski();
        let o = Spacetime4Point::origin();
        let c = |u: [f64; 4]| cone_membership(&g, &o, &Vector4::from(u));
        assert_eq!(c([1.0, 0.0, 0.0, 0.0]), ConeClass::TimelikeFuture);
        assert_eq!(c([1.0, 1.0, 0.0, 0.0]), ConeClass::NullFuture);
        assert_eq!(c([-1.0, 0.0, 0.0, 0.0]), ConeClass::Past);
        assert_eq!(c([0.0, 1.0, 0.0, 0.0]), ConeClass::Spacelike);
        assert_eq!(c([0.0; 4]), ConeClass::Zero);
    }

    #[test]
    fn constant_metric_inverse_matches_direct_inverse() {
        let g = Matrix4::new(
            2.0, 0.3, 0.0, 0.1,
            0.3, -1.0, 0.2, 0.0,
            0.0, 0.2, -1.5, 0.0,
            0.1, 0.0, 0.0, -0.7,
        );
        let m = DistributionMetric::constant(g).unwrap();
        let (g1, inv) = m.with_inverse(&Vector4::new(3.0, -1.0, 2.0, 0.5)).unwrap();
        assert_eq!(g1, g);
        assert!((inv * g - Matrix4::identity()).amax() < 1e-15);
        assert_eq!(m.jacobian_at(&Vector4::zeros()).unwrap(), [Matrix4::zeros(); 4]);
    }

    #[test]
    fn metric_validation() {
        let mut asym = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0));
        asym[(0, 2)] = 0.5;
        match DistributionMetric::constant(asym).unwrap_err() {
            Error::NotSymmetric { i, j, .. } => assert_eq!((i, j), (0, 2)),
            e => panic!("unexpected {e:?}"),
        }
        let riem = Matrix4::identity();
        assert!(matches!(
            DistributionMetric::constant(riem).unwrap_err(),
            Error::Signature { positive: 4, negative: 0, .. }
        ));
        let degenerate = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, 0.0, -1.0));
        assert!(matches!(
            DistributionMetric::constant(degenerate).unwrap_err(),
            Error::Degenerate { .. }
        ));
        let warped = DistributionMetric::from_fn(|x| {
            Matrix4::from_diagonal(&Vector4::new(1.0, -(2.0 * x[1]).exp(), -1.0, -1.0))
        });
        assert!(warped.checked(&Vector4::new(0.0, 0.2, 0.0, 0.0)).is_ok());
        let flipping = DistributionMetric::from_fn(|x| {
            Matrix4::from_diagonal(&Vector4::new(x[0], -1.0, -1.0, -1.0))
        });
        assert!(flipping.checked(&Vector4::new(1.0, 0.0, 0.0, 0.0)).is_ok());
        assert!(matches!(
            flipping.checked(&Vector4::new(-1.0, 0.0, 0.0, 0.0)).unwrap_err(),
            Error::Signature { .. }
        ));
    }

    #[test]
    fn polynomial_metric_derivatives_match_fd() {
        let mut entries: [[Polynomial4; 4]; 4] = Default::default();
        entries[0][0] = Polynomial4::new(vec![
            Monomial::new(1.0, [0; 4]),
            Monomial::new(0.1, [0, 2, 0, 0]),
        ]);
        entries[1][1] = Polynomial4::constant(-1.0);
        entries[2][2] = Polynomial4::new(vec![
            Monomial::new(-1.0, [0; 4]),
            Monomial::new(0.05, [1, 0, 0, 1]),
        ]);
        entries[3][3] = Polynomial4::constant(-1.0);
        entries[0][1] = Polynomial4::linear(0.01, 2);
        let g = DistributionMetric::polynomial(entries);
        let x = Vector4::new(0.5, 0.3, -0.2, 0.7);
        let a = g.jacobian_at(&x).unwrap();
        let b = g.fd_jacobian(&x);
        for k in 0..4 {
            assert_abs_diff_eq!(a[k], b[k], epsilon = 1e-8);
        }
        assert_eq!(g.value(&x)[(1, 0)], g.value(&x)[(0, 1)]);
    }

    fn small_poly() -> impl Strategy<Value = Polynomial4> {
        prop::collection::vec(
            (-2.0..2.0f64, prop::array::uniform4(0u32..3)).prop_map(|(c, e)| Monomial::new(c, e)),
            1..5,
        )
        .prop_map(Polynomial4::new)
    }

    fn point() -> impl Strategy<Value = [f64; 4]> {
        prop::array::uniform4(-1.5..1.5f64)
    }

    proptest! {
        #[test]
        fn faraday_is_exactly_antisymmetric(
            comps in prop::array::uniform4(small_poly()),
            x in point(),
        ) {
            let pot = PotentialField::polynomial(comps.clone());
            let f = faraday(&pot, &pt(x)).unwrap();
            let fd = faraday(&pot.without_jacobian(), &pt(x)).unwrap();
            for j in 0..4 {
                for k in 0..4 {
                    prop_assert_eq!(f.get(j, k), -f.get(k, j));
                    prop_assert_eq!(fd.get(j, k), -fd.get(k, j));
                }
            }
        }

        #[test]
        fn faraday_is_gauge_invariant(
            comps in prop::array::uniform4(small_poly()),
            f in small_poly(),
            x in point(),
        ) {
            let pot = PotentialField::polynomial(comps);
            let shifted = pot.gauge_shifted(&f);
            let a = faraday(&pot, &pt(x)).unwrap();
            let b = faraday(&shifted, &pt(x)).unwrap();
            let tol = 10.0 * pot.fd_step().powi(2);
            prop_assert!((a.matrix() - b.matrix()).amax() <= tol);

            // finite-difference route, coarser step so truncation dominates round-off
            let h = 1e-4;
            let pot_fd = pot.without_jacobian().with_fd_step(h).unwrap();
            let shifted_fd = shifted.without_jacobian().with_fd_step(h).unwrap();
            let a = faraday(&pot_fd, &pt(x)).unwrap();
            let b = faraday(&shifted_fd, &pt(x)).unwrap();
            prop_assert!((a.matrix() - b.matrix()).amax() <= 10.0 * h * h);
        }

        #[test]
        fn lift_zeroes_defect(
            comps in prop::array::uniform4(small_poly()),
            x in point(),
            fiber in -3.0..3.0f64,
            u in prop::array::uniform4(-5.0..5.0f64),
        ) {
            let pot = PotentialField::polynomial(comps);
            let base = pt(x);
            let u = Vector4::from(u);
            let v4 = lift_velocity(&pot, &base, &u);
            let ev = Event5::new(base, fiber).unwrap();
            let d = horizontality_defect(&pot, &ev, &[u[0], u[1], u[2], u[3], v4]);
            prop_assert!(d.abs() <= 4.0 * f64::EPSILON * v4.abs().max(f64::MIN_POSITIVE));
        }

        #[test]
        fn pseudonorm_even_and_polarizes(
            u in prop::array::uniform4(-3.0..3.0f64),
            v in prop::array::uniform4(-3.0..3.0f64),
            off in -0.2..0.2f64,
        ) {
            let mut m = Matrix4::from_diagonal(&Vector4::new(2.0, -1.0, -1.5, -1.0));
            m[(0, 1)] = off;
            m[(1, 0)] = off;
            let g = DistributionMetric::constant(m).unwrap();
            let o = Spacetime4Point::origin();
            let (u, v) = (Vector4::from(u), Vector4::from(v));
            let q = |w: &Vector4<f64>| pseudonorm(&g, &o, w);
            prop_assert_eq!(q(&u), q(&-u));
            let polar = (q(&(u + v)) - q(&(u - v))) / 4.0;
            let direct = (m * v).dot(&u);
            prop_assert!((polar - direct).abs() <= 1e-12 * (1.0 + u.norm_squared() + v.norm_squared()));
            let diag = (q(&(u + u)) - q(&(u - u))) / 4.0;
            prop_assert!((diag - q(&u)).abs() <= 1e-12 * (1.0 + u.norm_squared()));
        }
    }
}
