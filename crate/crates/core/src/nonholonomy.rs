//! Brackets of the frame `eᵢ = ∂ᵢ − Aᵢ ∂₄`, growth vector and ball-box exponents.
//!
//! `[eᵢ, eⱼ] = −F_ij ∂₄` and `[eᵢ, ∂₄] = 0`, so the distribution is bracket
//! generating in one step wherever F does not vanish.

use nalgebra::{DMatrix, Matrix4, Vector4};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{faraday, PotentialField, Spacetime4Point};
use crate::fit::loglog_slope;
use crate::geodesic::{integrate, GeodesicState, IntegratorConfig, ParticleParams};
use crate::fields::FramedDistribution;

/// Relative cutoff for "F ≠ 0" and for numerical rank of bracket spans.
pub const FIELD_THRESHOLD: f64 = 1e-12;

fn check_index(i: usize) -> Result<()> {
    if i > 3 {
        return Err(Error::Domain(format!("frame index must be in 0..=3, got {i}")));
    }
    Ok(())
}

/// `[eᵢ, eⱼ]` in the frame `(e₀, e₁, e₂, e₃, ∂₄)`.
pub fn frame_bracket(
    potential: &PotentialField,
    x: &Spacetime4Point,
    i: usize,
    j: usize,
) -> Result<[f64; 5]> {
    check_index(i)?;
    check_index(j)?;
    let f = faraday(potential, x)?;
    Ok([0.0, 0.0, 0.0, 0.0, -f.get(i, j)])
}

/// The same bracket computed from the coordinate vector fields on ℝ⁵ by
/// Richardson-extrapolated central differences, then re-expressed in the frame.
pub fn frame_bracket_fd(
    potential: &PotentialField,
    x: &Spacetime4Point,
    i: usize,
    j: usize,
) -> Result<[f64; 5]> {
    check_index(i)?;
    check_index(j)?;
    // coordinate components of eₖ at a 5-point: (δₖ, −Aₖ(x⁰..x³))
    let field = |k: usize, y: &[f64; 5]| -> [f64; 5] {
        let a = potential.value(&Vector4::new(y[0], y[1], y[2], y[3]));
        let mut v = [0.0; 5];
        v[k] = 1.0;
        v[4] = -a[k];
        v
    };
    let base = x.coords();
    let y0 = [base[0], base[1], base[2], base[3], 0.0];
    // ∂_b Yᵃ along direction b
    let directional = |k: usize, b: usize| -> [f64; 5] {
        let h0 = 1e-3 * y0[b].abs().max(1.0);
        let central = |h: f64| {
            let mut p = y0;
            let mut m = y0;
            p[b] += h;
            m[b] -= h;
            let (fp, fm) = (field(k, &p), field(k, &m));
            let dx = p[b] - m[b];
            std::array::from_fn::<f64, 5, _>(|a| (fp[a] - fm[a]) / dx)
        };
        let (d1, d2) = (central(h0), central(0.5 * h0));
        std::array::from_fn(|a| (4.0 * d2[a] - d1[a]) / 3.0)
    };
    let xi = field(i, &y0);
    let xj = field(j, &y0);
    let mut coord = [0.0; 5];
    for b in 0..5 {
        if xi[b] != 0.0 {
            let d = directional(j, b);
            for a in 0..5 {
                coord[a] += xi[b] * d[a];
            }
        }
        if xj[b] != 0.0 {
            let d = directional(i, b);
            for a in 0..5 {
                coord[a] -= xj[b] * d[a];
            }
        }
    }
    // v = Σ cᵏ eₖ + c⁴ ∂₄  ⇒  cᵏ = vᵏ, c⁴ = v⁴ + Σ Aₖ vᵏ
    let a = potential.value(base);
    let mut frame = coord;
    frame[4] = coord[4] + (0..4).map(|k| a[k] * coord[k]).sum::<f64>();
    Ok(frame)
}

/// Structure constants `c[l][i][j]` of `[ξᵢ, ξⱼ] = Σ cˡᵢⱼ ξₗ` for
/// `ξ = (e₀, e₁, e₂, e₃, ∂₄)`.
pub fn structure_constants(
    potential: &PotentialField,
    x: &Spacetime4Point,
) -> Result<[[[f64; 5]; 5]; 5]> {
    let mut c = [[[0.0; 5]; 5]; 5];
    for i in 0..4 {
        for j in 0..4 {
            let br = frame_bracket(potential, x, i, j)?;
            for (l, v) in br.iter().enumerate() {
                c[l][i][j] = *v;
            }
        }
    }
    Ok(c)
}

/// The only nonzero block, `c⁴ᵢⱼ` for i, j ∈ 0..=3.
pub fn fiber_structure_constants(
    potential: &PotentialField,
    x: &Spacetime4Point,
) -> Result<Matrix4<f64>> {
    let c = structure_constants(potential, x)?;
    Ok(Matrix4::from_fn(|i, j| c[4][i][j]))
}

/// Dimensions `n₁ < n₂ < …` of the iterated bracket spans; degree is the count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthVector {
    pub dims: Vec<usize>,
    pub degree: usize,
}

impl GrowthVector {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims[0] == 0 {
            return Err(Error::Domain("growth vector needs n1 >= 1".into()));
        }
        if dims.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!(
                "growth vector must be strictly increasing, got {dims:?}"
            )));
        }
        let degree = dims.len();
        Ok(Self { dims, degree })
    }

    /// Distribution of rank 2 in a 3-manifold with one bracket step.
    pub fn reference_2_in_3() -> Self {
        Self::new(vec![2, 3]).expect("valid")
    }
}

fn numerical_rank(vectors: &[[f64; 5]], scale: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(5, vectors.len(), |r, c| vectors[c][r]);
    let sv = m.svd(false, false).singular_values;
    sv.iter().filter(|&&s| s > FIELD_THRESHOLD * scale).count()
}

/// Growth vector of the distribution at `x`.
pub fn growth_vector(potential: &PotentialField, x: &Spacetime4Point) -> Result<GrowthVector> {
    let jac = potential.jacobian_at(x.coords())?;
    let scale = jac.amax().max(1.0);
    let mut span: Vec<[f64; 5]> = (0..4)
        .map(|i| std::array::from_fn(|r| if r == i { 1.0 } else { 0.0 }))
        .collect();
    let mut dims = vec![numerical_rank(&span, scale)];
    for i in 0..4 {
        for j in (i + 1)..4 {
            span.push(frame_bracket(potential, x, i, j)?);
        }
    }
    let n2 = numerical_rank(&span, scale);
    if n2 > dims[0] {
        dims.push(n2);
    }
    GrowthVector::new(dims)
}

/// Ball-box exponents: `φ(i) = j` iff `n_{j−1} < i ≤ n_j`, `n₀ = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxExponents {
    pub phi: Vec<usize>,
}

pub fn box_exponents(gv: &GrowthVector) -> BoxExponents {
    let top = *gv.dims.last().expect("nonempty growth vector");
    let phi = (1..=top)
        .map(|i| 1 + gv.dims.iter().position(|&n| i <= n).expect("i <= top"))
        .collect();
    BoxExponents { phi }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxReport {
    pub epsilons: Vec<f64>,
    /// `max |x⁴(ε)|` over the fan, per ε.
    pub max_fiber: Vec<f64>,
    /// `max_{i ≤ 3} |xⁱ(ε)|` over the fan, per ε.
    pub max_base: Vec<f64>,
    pub fiber_slope: Option<f64>,
    pub base_slope: Option<f64>,
    /// The fan never left the base (`x⁴ ≡ 0`).
    pub fiber_exactly_zero: bool,
}

/// Steps per fan geodesic.
const FAN_STEPS: usize = 200;

/// Shoots a fan of geodesics of length ε from the origin, initial velocity
/// `(√2, 0, sin α, cos α)` for `samples_per_eps` uniform α, and fits the
/// log-log growth of the reached box.
pub fn box_check(
    dist: &FramedDistribution,
    params: &ParticleParams,
    epsilons: &[f64],
    samples_per_eps: usize,
) -> Result<BoxReport> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Domain("epsilons must be positive and finite".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("epsilons must be strictly decreasing".into()));
    }
    if samples_per_eps == 0 {
        return Err(Error::Domain("samples_per_eps must be >= 1".into()));
    }
    let reach: Vec<(f64, f64)> = epsilons
        .par_iter()
        .map(|&eps| -> Result<(f64, f64)> {
            let cfg = IntegratorConfig::new(eps / FAN_STEPS as f64, eps, FAN_STEPS)?;
            let mut fiber: f64 = 0.0;
            let mut base: f64 = 0.0;
            for k in 0..samples_per_eps {
                let alpha = -std::f64::consts::PI
                    + 2.0 * std::f64::consts::PI * k as f64 / samples_per_eps as f64;
                let (s, c) = alpha.sin_cos();
                let start = GeodesicState::at_origin(Vector4::new(2f64.sqrt(), 0.0, s, c))?;
                let end = integrate(dist, params, &start, &cfg)?.last().state;
                fiber = fiber.max(end.position.fiber.abs());
                base = base.max(end.base().coords().amax());
            }
            Ok((fiber, base))
        })
        .collect::<Result<_>>()?;
    let max_fiber: Vec<f64> = reach.iter().map(|r| r.0).collect();
    let max_base: Vec<f64> = reach.iter().map(|r| r.1).collect();
    Ok(BoxReport {
        epsilons: epsilons.to_vec(),
        fiber_slope: loglog_slope(epsilons, &max_fiber),
        base_slope: loglog_slope(epsilons, &max_base),
        fiber_exactly_zero: max_fiber.iter().all(|&v| v == 0.0),
        max_fiber,
        max_base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DistributionMetric, FaradayTensor};
    use crate::polynomial::{Monomial, Polynomial4};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pt(x: [f64; 4]) -> Spacetime4Point {
        Spacetime4Point::from_array(x).unwrap()
    }

    #[test]
    fn zero_potential_brackets_vanish() {
        let pot = PotentialField::zero();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(frame_bracket(&pot, &pt([0.5; 4]), i, j).unwrap(), [0.0; 5]);
            }
        }
    }

    #[test]
    fn magnetic_bracket_points_along_fiber() {
        let pot = PotentialField::constant_magnetic(1.0);
        assert_eq!(frame_bracket(&pot, &pt([0.0; 4]), 2, 3).unwrap(), [0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(frame_bracket(&pot, &pt([0.0; 4]), 3, 2).unwrap(), [0.0, 0.0, 0.0, 0.0, -1.0]);
        assert!(frame_bracket(&pot, &pt([0.0; 4]), 4, 2).is_err());
    }

    #[test]
    fn structure_constants_are_transposed_field() {
        let f = FaradayTensor::from_fields([0.2, 0.0, -1.0], [0.5, 0.3, 0.0]);
        let pot = PotentialField::uniform_field(&f);
        let c = structure_constants(&pot, &pt([0.1, 0.2, 0.3, 0.4])).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(c[4][i][j], f.get(j, i), epsilon = 1e-15);
                for l in 0..4 {
                    assert_eq!(c[l][i][j], 0.0);
                }
            }
            assert_eq!(c[4][i][4], 0.0);
            assert_eq!(c[4][4][i], 0.0);
        }
    }

    fn smooth_potential() -> PotentialField {
        PotentialField::from_fn(|x| {
            Vector4::new(
                (x[1] * x[2]).sin(),
                x[0].exp() * x[3] * 0.3,
                x[3].cos() * x[0] + x[1] * x[1],
                x[1] * x[2] * x[0],
            )
        })
        .with_jacobian(|x| {
            // J[(k, j)] = ∂A_k/∂xʲ
            let c = (x[1] * x[2]).cos();
            let e = x[0].exp();
            Matrix4::new(
                0.0, x[2] * c, x[1] * c, 0.0,
                0.3 * e * x[3], 0.0, 0.0, 0.3 * e,
                x[3].cos(), 2.0 * x[1], 0.0, -x[3].sin() * x[0],
                x[1] * x[2], x[0] * x[2], x[0] * x[1], 0.0,
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn bracket_routes_agree(x in prop::array::uniform4(-1.0..1.0f64), i in 0usize..4, j in 0usize..4) {
            let pot = smooth_potential();
            let a = frame_bracket(&pot, &pt(x), i, j).unwrap();
            let b = frame_bracket_fd(&pot, &pt(x), i, j).unwrap();
            for c in 0..5 {
                prop_assert!((a[c] - b[c]).abs() <= 1e-10, "{:?} vs {:?}", a, b);
            }
            let r = frame_bracket(&pot, &pt(x), j, i).unwrap();
            prop_assert_eq!(a[4], -r[4]);
        }

        #[test]
        fn growth_vector_is_gauge_invariant(
            x in prop::array::uniform4(-1.0..1.0f64),
            coeffs in prop::array::uniform3(-2.0..2.0f64),
        ) {
            let f = Polynomial4::new(vec![
                Monomial::new(coeffs[0], [2, 0, 0, 0]),
                Monomial::new(coeffs[1], [0, 1, 1, 0]),
                Monomial::new(coeffs[2], [1, 0, 0, 3]),
            ]);
            for pot in [PotentialField::constant_magnetic(0.8), PotentialField::zero()] {
                let shifted = pot.gauge_shifted(&f);
                prop_assert_eq!(
                    growth_vector(&pot, &pt(x)).unwrap(),
                    growth_vector(&shifted, &pt(x)).unwrap()
                );
            }
        }
    }

    #[test]
    fn growth_vectors() {
        let gv = growth_vector(&PotentialField::constant_magnetic(1.0), &pt([0.0; 4])).unwrap();
        assert_eq!(gv.dims, vec![4, 5]);
        assert_eq!(gv.degree, 2);
        let gv = growth_vector(&PotentialField::zero(), &pt([0.0; 4])).unwrap();
        assert_eq!(gv.dims, vec![4]);
        assert_eq!(gv.degree, 1);
        assert!(GrowthVector::new(vec![4, 4]).is_err());
    }

    #[test]
    fn exponents() {
        let e = |d: Vec<usize>| box_exponents(&GrowthVector::new(d).unwrap()).phi;
        assert_eq!(e(vec![4, 5]), vec![1, 1, 1, 1, 2]);
        assert_eq!(e(vec![2, 3]), vec![1, 1, 2]);
        assert_eq!(e(vec![4]), vec![1, 1, 1, 1]);
        assert_eq!(box_exponents(&GrowthVector::reference_2_in_3()).phi, vec![1, 1, 2]);
    }

    #[test]
    fn piecewise_field_exponents_away_from_transition() {
        // A₂ = φ x³ for x³ > 0, zero for x³ < 0: F vanishes on the lower half
        let pot = PotentialField::from_fn(|x| Vector4::new(0.0, 0.0, 0.5 * x[3].max(0.0).powi(2), 0.0));
        let upper = box_exponents(&growth_vector(&pot, &pt([0.0, 0.0, 0.0, 0.5])).unwrap());
        let lower = box_exponents(&growth_vector(&pot, &pt([0.0, 0.0, 0.0, -0.5])).unwrap());
        assert_eq!(upper.phi, vec![1, 1, 1, 1, 2]);
        assert_eq!(lower.phi, vec![1, 1, 1, 1]);
    }

    #[test]
    fn box_check_fits_exponents() {
        let dist = FramedDistribution::flat_magnetic(1.0);
        let params = ParticleParams::new(1.0, 1.0).unwrap();
        let r = box_check(&dist, &params, &[0.4, 0.2, 0.1, 0.05], 16).unwrap();
        let fs = r.fiber_slope.unwrap();
        let bs = r.base_slope.unwrap();
        assert!((1.95..=2.3).contains(&fs), "fiber slope {fs}");
        assert!((bs - 1.0).abs() <= 0.05, "base slope {bs}");
        assert!(!r.fiber_exactly_zero);
    }

    #[test]
    fn box_check_without_field_stays_in_base() {
        let dist = FramedDistribution::new(PotentialField::zero(), DistributionMetric::minkowski());
        let params = ParticleParams::new(1.0, 1.0).unwrap();
        let r = box_check(&dist, &params, &[0.4, 0.2, 0.1, 0.05], 8).unwrap();
        assert!(r.fiber_exactly_zero);
        assert_eq!(r.fiber_slope, None);
        assert!((r.base_slope.unwrap() - 1.0).abs() < 1e-9);
        assert!(box_check(&dist, &params, &[0.1, 0.2], 8).is_err());
    }
}
