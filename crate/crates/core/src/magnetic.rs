//! Closed-form horizontal geodesics in a constant magnetic field.
//!
//! Flat metric, `A = (0, 0, φ x³, 0)`, cyclotron rate `p = qφ/m`, unit planar
//! speed `(u²)² + (u³)² = 1` with initial direction `(u², u³) = (sin α, cos α)`.
//! The projection to (x², x³) is a circle of radius `1/|p|`; the fiber
//! coordinate x⁴ drifts by `−φt/(2p)` per unit time on top of a bounded
//! oscillation.
//!
//! Endpoints at fixed length `s` sweep the geodesic sphere (`|ps| ≤ 2π`) and,
//! past the first full turn, the nonholonomic wavefront.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::loglog_slope;

/// Below this `|p t|` the closed form switches to its Taylor expansion.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// Circle centre and fiber offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Centre {
    /// `b₂ = cos α / p`, `b₃ = −sin α / p`, `b₄` such that `x⁴(0) = 0`.
    Canonical,
    Explicit { b2: f64, b3: f64, b4: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticGeodesicParams {
    pub alpha: f64,
    pub p: f64,
    pub phi: f64,
    pub centre: Centre,
}

impl MagneticGeodesicParams {
    pub fn canonical(alpha: f64, p: f64, phi: f64) -> Self {
        Self {
            alpha,
            p,
            phi,
            centre: Centre::Canonical,
        }
    }

    /// `(b₂, b₃, b₄)`; infinite for the canonical centre at `p = 0`.
    pub fn constants(&self) -> (f64, f64, f64) {
        match self.centre {
            Centre::Explicit { b2, b3, b4 } => (b2, b3, b4),
            Centre::Canonical => {
                let (s, c) = self.alpha.sin_cos();
                let p = self.p;
                (
                    c / p,
                    -s / p,
                    self.phi * (2.0 * self.alpha).sin() / (4.0 * p * p),
                )
            }
        }
    }

    /// Planar velocity `(u², u³)` at time t.
    pub fn planar_velocity(&self, t: f64) -> (f64, f64) {
        (self.alpha + self.p * t).sin_cos()
    }
}

/// `(x², x³, x⁴)` at time t.
pub fn closed_form(params: &MagneticGeodesicParams, t: f64) -> [f64; 3] {
    match params.centre {
        Centre::Explicit { .. } => closed_form_literal(params, t),
        Centre::Canonical => {
            if t == 0.0 {
                return [0.0; 3];
            }
            if (params.p * t).abs() < SERIES_THRESHOLD {
                series_branch(params.alpha, params.p, params.phi, t)
            } else {
                direct_branch(params.alpha, params.p, params.phi, t)
            }
        }
    }
}

/// The general solution written term by term with its integration constants:
///
/// ```text
/// x² = −cos(α+pt)/p + b₂
/// x³ =  sin(α+pt)/p + b₃
/// x⁴ = φ/(4p²)(−2pt + sin(2α+2pt)) + (φ/p) b₃ cos(α+pt) + b₄
/// ```
///
/// Loses precision as `pt → 0`; [`closed_form`] avoids that for the canonical centre.
pub fn closed_form_literal(params: &MagneticGeodesicParams, t: f64) -> [f64; 3] {
    let MagneticGeodesicParams { alpha, p, phi, .. } = *params;
    let (b2, b3, b4) = params.constants();
    let th = alpha + p * t;
    [
        -th.cos() / p + b2,
        th.sin() / p + b3,
        phi / (4.0 * p * p) * (-2.0 * p * t + (2.0 * th).sin()) + phi / p * b3 * th.cos() + b4,
    ]
}

// (1 − cos e)/e²
fn one_minus_cos_over_sq(e: f64) -> f64 {
    let h = (0.5 * e).sin();
    2.0 * h * h / (e * e)
}

fn one_minus_cos_series(e: f64) -> f64 {
    let e2 = e * e;
    0.5 - e2 / 24.0 + e2 * e2 / 720.0 - e2 * e2 * e2 / 40320.0
}

// (sin e − e)/e²
fn sin_minus_id_series(e: f64) -> f64 {
    let e2 = e * e;
    e * (-1.0 / 6.0 + e2 / 120.0 - e2 * e2 / 5040.0 + e2 * e2 * e2 / 362880.0)
}

// sin(e)/e
fn sinc_series(e: f64) -> f64 {
    let e2 = e * e;
    1.0 - e2 / 6.0 + e2 * e2 / 120.0 - e2 * e2 * e2 / 5040.0
}

/// Canonical closed form with the cancellations removed by product formulas.
pub(crate) fn direct_branch(alpha: f64, p: f64, phi: f64, t: f64) -> [f64; 3] {
    let e = p * t;
    let (sa, ca) = alpha.sin_cos();
    let half = (0.5 * e).sin();
    let mid = alpha + 0.5 * e;
    let x2 = 2.0 * mid.sin() * half / p;
    let x3 = 2.0 * mid.cos() * half / p;
    let s1 = |e: f64| (e.sin() - e) / (e * e);
    let x4 = phi
        * t
        * t
        * (-(2.0 * alpha).sin() * one_minus_cos_over_sq(2.0 * e)
            + (2.0 * alpha).cos() * s1(2.0 * e)
            + sa * ca * one_minus_cos_over_sq(e)
            + sa * sa * s1(e));
    [x2, x3, x4]
}

/// Sixth-order expansion in `e = pt`.
pub(crate) fn series_branch(alpha: f64, p: f64, phi: f64, t: f64) -> [f64; 3] {
    let e = p * t;
    let (sa, ca) = alpha.sin_cos();
    let c1 = one_minus_cos_series(e);
    let sc = sinc_series(e);
    let x2 = t * (ca * e * c1 + sa * sc);
    let x3 = t * (-sa * e * c1 + ca * sc);
    let x4 = phi
        * t
        * t
        * (-(2.0 * alpha).sin() * one_minus_cos_series(2.0 * e)
            + (2.0 * alpha).cos() * sin_minus_id_series(2.0 * e)
            + sa * ca * c1
            + sa * sa * sin_minus_id_series(e));
    [x2, x3, x4]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub radius_s: f64,
    pub alpha_count: usize,
    pub p_count: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub phi: f64,
}

impl SphereSpec {
    fn validate_grid(&self) -> Result<()> {
        if !(self.radius_s > 0.0 && self.radius_s.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "radius must be > 0, got {}",
                self.radius_s
            )));
        }
        if self.alpha_count < 2 || self.p_count < 2 {
            return Err(Error::InvalidSpec(format!(
                "grid must be at least 2x2, got {}x{}",
                self.alpha_count, self.p_count
            )));
        }
        if !(self.p_min.is_finite() && self.p_max.is_finite() && self.phi.is_finite()) {
            return Err(Error::InvalidSpec("p range and phi must be finite".into()));
        }
        if self.p_min > self.p_max {
            return Err(Error::InvalidSpec(format!(
                "p_min {} exceeds p_max {}",
                self.p_min, self.p_max
            )));
        }
        Ok(())
    }

    pub fn alpha_at(&self, i: usize) -> f64 {
        lerp(-PI, PI, i, self.alpha_count)
    }

    pub fn p_at(&self, j: usize) -> f64 {
        lerp(self.p_min, self.p_max, j, self.p_count)
    }
}

// exact at both ends
fn lerp(a: f64, b: f64, i: usize, n: usize) -> f64 {
    let d = (n - 1) as f64;
    ((n - 1 - i) as f64 * a + i as f64 * b) / d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudKind {
    Sphere,
    Wavefront,
}

impl CloudKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CloudKind::Sphere => "sphere",
            CloudKind::Wavefront => "wavefront",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
    pub alpha: f64,
    pub p: f64,
    pub t: f64,
}

/// Endpoints on an (α, p) grid, row index `i_alpha * p_count + i_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
    pub kind: CloudKind,
    pub meta: SphereSpec,
}

fn sample(spec: &SphereSpec, kind: CloudKind) -> PointCloud {
    let t = spec.radius_s;
    let points = (0..spec.alpha_count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let alpha = spec.alpha_at(i);
            (0..spec.p_count).map(move |j| {
                let p = spec.p_at(j);
                let [x2, x3, x4] =
                    closed_form(&MagneticGeodesicParams::canonical(alpha, p, spec.phi), t);
                CloudPoint {
                    x2,
                    x3,
                    x4,
                    alpha,
                    p,
                    t,
                }
            })
        })
        .collect();
    PointCloud {
        points,
        kind,
        meta: *spec,
    }
}

/// The geodesic sphere of radius s: only the optimal range `|p s| ≤ 2π`.
pub fn sphere_sample(spec: &SphereSpec) -> Result<PointCloud> {
    spec.validate_grid()?;
    let limit = 2.0 * PI * (1.0 + 1e-12);
    let worst = spec.p_min.abs().max(spec.p_max.abs()) * spec.radius_s;
    if worst > limit {
        return Err(Error::InvalidSpec(format!(
            "|p|*s = {worst} exceeds 2*pi; geodesics past one full turn are not optimal \
             (sample them as a wavefront instead)"
        )));
    }
    Ok(sample(spec, CloudKind::Sphere))
}

/// Endpoints of length-s geodesics without the optimality cutoff.
pub fn wavefront_sample(spec: &SphereSpec) -> Result<PointCloud> {
    spec.validate_grid()?;
    let s = spec.radius_s;
    if (spec.p_min * s).abs() < PI && (spec.p_max * s).abs() < PI {
        return Err(Error::InvalidSpec(format!(
            "wavefront needs |p|*s >= pi at one end of the p range, got [{}, {}]",
            spec.p_min * s,
            spec.p_max * s
        )));
    }
    Ok(sample(spec, CloudKind::Wavefront))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeReport {
    /// `(p, max_α |x⁴(s) + φs/(2p)|)`
    pub endpoint_residuals: Vec<(f64, f64)>,
    /// `(p, max_α max_t |x⁴(t) + φt/(2p)|)` over the last full turn before s.
    pub envelope_residuals: Vec<(f64, f64)>,
    /// Log-log slope of the envelope residual against |p|.
    pub slope: Option<f64>,
    /// `min |x⁴|/ρ` over endpoints with ρ > 0, divided by `|φ| s / 4`.
    pub min_cone_ratio: f64,
    pub contained: bool,
}

const CONE_ALPHAS: usize = 64;
const CONE_PHASES: usize = 128;
/// Relative slack on the cone half-angle.
pub const CONE_TOLERANCE: f64 = 0.05;

/// Checks the large-p drift `x⁴ ≈ −φs/(2p)` and containment of endpoints in
/// the cone `|x⁴| ≥ (|φ| s/4) ρ` around the x⁴ axis.
///
/// The endpoint residual vanishes identically whenever `ps` is a multiple of
/// 2π, so the O(1/p²) slope is fitted on the envelope taken along the last
/// full turn of each geodesic.
pub fn cone_bound_check(s: f64, phi: f64, p_values: &[f64]) -> Result<ConeReport> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("s must be > 0, got {s}")));
    }
    if let Some(p) = p_values.iter().find(|p| p.abs() * s < 4.0 * PI) {
        return Err(Error::Domain(format!(
            "cone check needs |p|*s >= 4*pi, got p = {p}"
        )));
    }
    let alphas: Vec<f64> = (0..CONE_ALPHAS)
        .map(|i| -PI + 2.0 * PI * i as f64 / CONE_ALPHAS as f64)
        .collect();
    let bound = phi.abs() * s / 4.0;
    let mut endpoint_residuals = Vec::with_capacity(p_values.len());
    let mut envelope_residuals = Vec::with_capacity(p_values.len());
    let mut min_ratio = f64::INFINITY;
    for &p in p_values {
        let drift = |t: f64| -phi * t / (2.0 * p);
        let turn = 2.0 * PI / p.abs();
        let mut end_max: f64 = 0.0;
        let mut env_max: f64 = 0.0;
        for &alpha in &alphas {
            let g = MagneticGeodesicParams::canonical(alpha, p, phi);
            let [x2, x3, x4] = closed_form(&g, s);
            end_max = end_max.max((x4 - drift(s)).abs());
            let rho = x2.hypot(x3);
            if rho > 1e-12 / p.abs() && bound > 0.0 {
                min_ratio = min_ratio.min(x4.abs() / rho / bound);
            }
            for k in 0..CONE_PHASES {
                let t = s - turn * k as f64 / CONE_PHASES as f64;
                let x4 = closed_form(&g, t)[2];
                env_max = env_max.max((x4 - drift(t)).abs());
            }
        }
        endpoint_residuals.push((p, end_max));
        envelope_residuals.push((p, env_max));
    }
    let ps: Vec<f64> = envelope_residuals.iter().map(|r| r.0.abs()).collect();
    let rs: Vec<f64> = envelope_residuals.iter().map(|r| r.1).collect();
    let slope = loglog_slope(&ps, &rs);
    if bound == 0.0 || !min_ratio.is_finite() {
        min_ratio = 1.0;
    }
    Ok(ConeReport {
        endpoint_residuals,
        envelope_residuals,
        slope,
        min_cone_ratio: min_ratio,
        contained: min_ratio >= 1.0 / (1.0 + CONE_TOLERANCE),
    })
}

/// Two-term expansion of x⁴ near the k-th return over the start point,
/// `p = 2πk/s + θ`: `−φs²/(4πk) + φs³θ/(4π²k²)`.
pub fn x4_return_distance(s: f64, phi: f64, k: i64, theta: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("return index k must be nonzero".into()));
    }
    let k = k as f64;
    Ok(-phi * s * s / (4.0 * PI * k) + phi * s.powi(3) * theta / (4.0 * PI * PI * k * k))
}
