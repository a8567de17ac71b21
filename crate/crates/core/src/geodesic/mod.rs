//! Equations of horizontal geodesics and their numerical integration.
//!
//! State layout is `(x⁰, x¹, x², x³, x⁴, u⁰, u¹, u², u³)`. The base velocity
//! obeys the charged-particle equation
//!
//! ```text
//! duᵏ/dt = −Γᵏᵢⱼ uⁱ uʲ + (q/m) Fᵏⱼ uʲ
//! ```
//!
//! and the fiber follows from horizontality, `dx⁴/dt = −Σ Aⱼ uʲ`. The charge
//! is the fiber momentum p₄; it is a constant of motion and is never updated.

mod abnormal;
mod action;
mod integrate;

pub use abnormal::{abnormal_kernel, abnormal_residual, subspace_distance, AbnormalKernel};
pub use action::{action_values, ActionValues};
pub use integrate::{
    gauge_transform_check, integrate, integrate_lagrange, integrate_with, GaugeReport,
    IntegratorConfig, Sample, Trajectory,
};

use nalgebra::{Matrix4, SVector, Vector4};

use crate::error::{Error, Result};
use crate::fields::{faraday, lift_velocity, DistributionMetric, Event5, FramedDistribution, Spacetime4Point};
use crate::nonholonomy::fiber_structure_constants;

/// Derivative of the 9-component state.
pub type StateVector = SVector<f64, 9>;

/// `Γ[k][i][j]`
pub type Christoffel = [[[f64; 4]; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleParams {
    mass: f64,
    charge: f64,
}

impl ParticleParams {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParticle(format!("mass must be > 0, got {mass}")));
        }
        if !charge.is_finite() {
            return Err(Error::InvalidParticle(format!("charge must be finite, got {charge}")));
        }
        Ok(Self { mass, charge })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn charge_to_mass(&self) -> f64 {
        self.charge / self.mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    pub position: Event5,
    pub velocity: Vector4<f64>,
}

impl GeodesicState {
    pub fn new(position: Event5, velocity: Vector4<f64>) -> Result<Self> {
        if let Some(k) = velocity.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "velocity",
                component: format!("u{k}"),
            });
        }
        Ok(Self { position, velocity })
    }

    /// Starts at the origin of ℝ⁵.
    pub fn at_origin(velocity: Vector4<f64>) -> Result<Self> {
        Self::new(Event5::origin(), velocity)
    }

    pub fn to_vector(&self) -> StateVector {
        let b = self.position.base.coords();
        let u = &self.velocity;
        StateVector::from_column_slice(&[
            b[0],
            b[1],
            b[2],
            b[3],
            self.position.fiber,
            u[0],
            u[1],
            u[2],
            u[3],
        ])
    }

    pub fn from_vector(v: &StateVector) -> Result<Self> {
        let base = Spacetime4Point::new(Vector4::new(v[0], v[1], v[2], v[3]))?;
        let position = Event5::new(base, v[4])?;
        Self::new(position, Vector4::new(v[5], v[6], v[7], v[8]))
    }

    pub fn base(&self) -> &Spacetime4Point {
        &self.position.base
    }
}

/// Lower-index symbols `Γ[k][i][j] = Γ_{k,ij} = ½(∂ᵢ g_kj + ∂ⱼ g_ki − ∂ₖ g_ij)`.
pub fn christoffel_lower(metric: &DistributionMetric, x: &Spacetime4Point) -> Result<Christoffel> {
    let dg = metric.jacobian_at(x.coords())?;
    Ok(lower_from_derivatives(&dg))
}

fn lower_from_derivatives(dg: &[Matrix4<f64>; 4]) -> Christoffel {
    let mut out = [[[0.0; 4]; 4]; 4];
    for (k, row) in out.iter_mut().enumerate() {
        for (i, col) in row.iter_mut().enumerate() {
            for j in i..4 {
                let v = 0.5 * (dg[i][(k, j)] + dg[j][(k, i)] - dg[k][(i, j)]);
                col[j] = v;
            }
        }
        for i in 0..4 {
            for j in 0..i {
                row[i][j] = row[j][i];
            }
        }
    }
    out
}

/// `Γᵏᵢⱼ` of the restricted metric, symmetric in (i, j).
pub fn christoffel(metric: &DistributionMetric, x: &Spacetime4Point) -> Result<Christoffel> {
    let (_, g_inv) = metric.with_inverse(x.coords())?;
    let lower = christoffel_lower(metric, x)?;
    Ok(raise(&g_inv, &lower))
}

fn raise(g_inv: &Matrix4<f64>, lower: &Christoffel) -> Christoffel {
    let mut out = [[[0.0; 4]; 4]; 4];
    for (k, row) in out.iter_mut().enumerate() {
        for i in 0..4 {
            for j in 0..4 {
                row[i][j] = (0..4).map(|l| g_inv[(k, l)] * lower[l][i][j]).sum();
            }
        }
    }
    out
}

fn contract(gamma: &[[f64; 4]; 4], u: &Vector4<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += gamma[i][j] * u[i] * u[j];
        }
    }
    acc
}

fn kinematic_part(dist: &FramedDistribution, state: &GeodesicState) -> StateVector {
    let u = &state.velocity;
    let mut out = StateVector::zeros();
    out.fixed_rows_mut::<4>(0).copy_from(u);
    out[4] = lift_velocity(&dist.potential, state.base(), u);
    out
}

/// Right-hand side of the geodesic (charged-particle) equations.
pub fn eom_rhs(
    dist: &FramedDistribution,
    params: &ParticleParams,
    state: &GeodesicState,
) -> Result<StateVector> {
    let x = state.base();
    let (_, g_inv) = dist.metric.with_inverse(x.coords())?;
    let gamma = raise(&g_inv, &christoffel_lower(&dist.metric, x)?);
    let f_mixed = faraday(&dist.potential, x)?.raised(&g_inv);
    let u = &state.velocity;
    let lorentz = f_mixed * u * params.charge_to_mass();

    let mut out = kinematic_part(dist, state);
    for k in 0..4 {
        out[5 + k] = -contract(&gamma[k], u) + lorentz[k];
    }
    Ok(out)
}

/// Output of [`lagrange_rhs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeRhs {
    pub derivative: StateVector,
    /// Always zero: the multiplier is conserved.
    pub dlambda: f64,
    /// `max_k |Σ_j F_jk uʲ|`
    pub abnormal_residual: f64,
}

/// Euler–Lagrange form with multiplier λ on the horizontality constraint.
///
/// Projected on the frame, `a₀ m ⟨Dγ̇/dt, eᵢ⟩ + λ Σⱼ c⁴ᵢⱼ vʲ = 0` with
/// structure constants taken from the frame brackets. For `a0 = 1` this is
/// solved for the acceleration; for `a0 = 0` only the kinematic part is
/// returned after checking that the velocity lies in the kernel of F.
pub fn lagrange_rhs(
    dist: &FramedDistribution,
    params: &ParticleParams,
    state: &GeodesicState,
    a0: f64,
    lambda: f64,
) -> Result<LagrangeRhs> {
    let x = state.base();
    let u = &state.velocity;
    let f = faraday(&dist.potential, x)?;
    let residual = abnormal_residual(&f, u);
    let mut derivative = kinematic_part(dist, state);

    if a0 == 0.0 {
        let scale = f.matrix().norm() * u.norm();
        if residual > 1e-12 * scale {
            return Err(Error::AbnormalityViolation { residual });
        }
        return Ok(LagrangeRhs {
            derivative,
            dlambda: 0.0,
            abnormal_residual: residual,
        });
    }
    if a0 != 1.0 {
        return Err(Error::Domain(format!("a0 must be 0 or 1, got {a0}")));
    }

    let g = dist.metric.checked(x.coords())?;
    let lower = christoffel_lower(&dist.metric, x)?;
    let c4 = fiber_structure_constants(&dist.potential, x)?;
    let m = params.mass();
    // m g_il (dvˡ/dt + Γˡⱼₖ vʲvᵏ) = −λ c⁴ᵢⱼ vʲ
    let rhs = Vector4::from_fn(|i, _| -m * contract(&lower[i], u) - lambda * (c4 * u)[i]);
    let lu = (g * m).lu();
    let accel = lu.solve(&rhs).ok_or(Error::Degenerate {
        point: x.to_array(),
        det: g.determinant(),
    })?;
    derivative.fixed_rows_mut::<4>(5).copy_from(&accel);
    Ok(LagrangeRhs {
        derivative,
        dlambda: 0.0,
        abnormal_residual: residual,
    })
}

/// Canonical momenta `p_k = m g_kl uˡ / √⟨u,u⟩ + q A_k`, `p₄ = q`; `None`
/// for non-timelike velocities.
pub fn canonical_momentum(
    dist: &FramedDistribution,
    params: &ParticleParams,
    state: &GeodesicState,
) -> Option<[f64; 5]> {
    let x = state.base().coords();
    let g = dist.metric.value(x);
    let u = &state.velocity;
    let gu = g * u;
    let q2 = gu.dot(u);
    if !(q2 > 0.0) {
        return None;
    }
    let a = dist.potential.value(x);
    let norm = q2.sqrt();
    let q = params.charge();
    let p = Vector4::from_fn(|k, _| params.mass() * gu[k] / norm + q * a[k]);
    Some([p[0], p[1], p[2], p[3], q])
}
