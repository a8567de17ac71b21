//! Fixed-step classical Runge–Kutta on the 9-component state.

use crate::error::{Error, Result};
use crate::fields::{horizontality_defect, lift_velocity, pseudonorm, FramedDistribution};
use crate::polynomial::Polynomial4;

use super::{canonical_momentum, eom_rhs, lagrange_rhs, GeodesicState, ParticleParams, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn new(step: f64, t_end: f64, record_every: usize) -> Result<Self> {
        let cfg = Self {
            step,
            t_end,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("step must be > 0, got {}", self.step)));
        }
        if !(self.t_end.is_finite() && self.step <= self.t_end) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be finite and >= step, got t_end = {} with step = {}",
                self.t_end, self.step
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened when `t_end` is not a multiple of `step`.
    pub fn step_count(&self) -> usize {
        let ratio = self.t_end / self.step;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }

    fn time_at(&self, i: usize, n: usize) -> f64 {
        if i == n {
            self.t_end
        } else {
            i as f64 * self.step
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: GeodesicState,
    pub pseudonorm: f64,
    /// ω of `(u, dx⁴/dt)`, recomputed from the stored state.
    pub horizontality_defect: f64,
    /// `(p₀..p₃, p₄)`; `None` when the velocity is not timelike.
    pub momentum: Option<[f64; 5]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// `max |⟨u,u⟩(t) − ⟨u,u⟩(0)|`
    pub fn max_pseudonorm_drift(&self) -> f64 {
        let q0 = self.first().pseudonorm;
        self.samples
            .iter()
            .map(|s| (s.pseudonorm - q0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_horizontality_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.horizontality_defect.abs())
            .fold(0.0, f64::max)
    }
}

fn make_sample(
    dist: &FramedDistribution,
    params: &ParticleParams,
    t: f64,
    state: GeodesicState,
) -> Sample {
    let u = &state.velocity;
    let v4 = lift_velocity(&dist.potential, state.base(), u);
    Sample {
        t,
        state,
        pseudonorm: pseudonorm(&dist.metric, state.base(), u),
        horizontality_defect: horizontality_defect(
            &dist.potential,
            &state.position,
            &[u[0], u[1], u[2], u[3], v4],
        ),
        momentum: canonical_momentum(dist, params, &state),
    }
}

/// Integrates an arbitrary right-hand side with classical RK4.
pub fn integrate_with<F>(
    dist: &FramedDistribution,
    params: &ParticleParams,
    start: &GeodesicState,
    cfg: &IntegratorConfig,
    rhs: F,
) -> Result<Trajectory>
where
    F: Fn(&GeodesicState) -> Result<StateVector>,
{
    cfg.validate()?;
    let n = cfg.step_count();
    let mut samples = Vec::with_capacity(n / cfg.record_every + 2);
    samples.push(make_sample(dist, params, 0.0, *start));

    let mut y = start.to_vector();
    let mut state = *start;
    for i in 0..n {
        let t0 = cfg.time_at(i, n);
        let t1 = cfg.time_at(i + 1, n);
        let h = t1 - t0;
        let diverged = |_| Error::Divergence { last_good_t: t0 };
        let stage = |v: StateVector| -> Result<StateVector> {
            let s = GeodesicState::from_vector(&v).map_err(diverged)?;
            match rhs(&s) {
                Err(Error::NonFinite { .. }) => Err(Error::Divergence { last_good_t: t0 }),
                other => other,
            }
        };
        let k1 = stage(y)?;
        let k2 = stage(y + k1 * (0.5 * h))?;
        let k3 = stage(y + k2 * (0.5 * h))?;
        let k4 = stage(y + k3 * h)?;
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        state = GeodesicState::from_vector(&y).map_err(diverged)?;
        if (i + 1) % cfg.record_every == 0 || i + 1 == n {
            samples.push(make_sample(dist, params, t1, state));
        }
    }
    debug_assert_eq!(samples.last().map(|s| s.state), Some(state));
    Ok(Trajectory { samples })
}

/// Integrates the geodesic equations from `start` over `[0, t_end]`.
pub fn integrate(
    dist: &FramedDistribution,
    params: &ParticleParams,
    start: &GeodesicState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_with(dist, params, start, cfg, |s| eom_rhs(dist, params, s))
}

/// Integrates the Euler–Lagrange form (a₀ = 1) with constant multiplier λ.
pub fn integrate_lagrange(
    dist: &FramedDistribution,
    params: &ParticleParams,
    start: &GeodesicState,
    cfg: &IntegratorConfig,
    lambda: f64,
) -> Result<Trajectory> {
    integrate_with(dist, params, start, cfg, |s| {
        let out = lagrange_rhs(dist, params, s, 1.0, lambda)?;
        debug_assert_eq!(out.dlambda, 0.0);
        Ok(out.derivative)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeReport {
    /// Max deviation of x⁰..x³ and u between the two gauges.
    pub base_deviation: f64,
    /// Max deviation of `x⁴' − [x⁴ − (f(x(t)) − f(x(0)))]`.
    pub fiber_deviation: f64,
}

/// Integrates with `A` and with `A + ∇f` from the same start and compares.
pub fn gauge_transform_check(
    dist: &FramedDistribution,
    params: &ParticleParams,
    start: &GeodesicState,
    cfg: &IntegratorConfig,
    f: &Polynomial4,
) -> Result<GaugeReport> {
    let shifted = FramedDistribution::new(dist.potential.gauge_shifted(f), dist.metric.clone());
    let a = integrate(dist, params, start, cfg)?;
    let b = integrate(&shifted, params, start, cfg)?;
    let f0 = f.eval(start.base().coords());
    let mut base_deviation: f64 = 0.0;
    let mut fiber_deviation: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let xa = sa.state.base().coords();
        let xb = sb.state.base().coords();
        base_deviation = base_deviation
            .max((xa - xb).amax())
            .max((sa.state.velocity - sb.state.velocity).amax());
        let expected = sa.state.position.fiber - (f.eval(xa) - f0);
        fiber_deviation = fiber_deviation.max((sb.state.position.fiber - expected).abs());
    }
    Ok(GaugeReport {
        base_deviation,
        fiber_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DistributionMetric, PotentialField};
    use crate::geodesic::action_values;
    use crate::magnetic::{closed_form, MagneticGeodesicParams};
    use crate::polynomial::Monomial;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix4, Vector4};

    fn free() -> FramedDistribution {
        FramedDistribution::new(PotentialField::zero(), DistributionMetric::minkowski())
    }

    /// Unit planar speed, unit pseudonorm: u = (√2, 0, sin α, cos α).
    fn magnetic_start(alpha: f64) -> GeodesicState {
        let (s, c) = alpha.sin_cos();
        GeodesicState::at_origin(Vector4::new(2f64.sqrt(), 0.0, s, c)).unwrap()
    }

    fn max_error_vs_closed_form(traj: &Trajectory, alpha: f64, p: f64, phi: f64) -> f64 {
        let g = MagneticGeodesicParams::canonical(alpha, p, phi);
        traj.samples
            .iter()
            .map(|s| {
                let [x2, x3, x4] = closed_form(&g, s.t);
                let b = s.state.base().coords();
                (b[2] - x2)
                    .abs()
                    .max((b[3] - x3).abs())
                    .max((s.state.position.fiber - x4).abs())
                    .max((b[0] - 2f64.sqrt() * s.t).abs())
                    .max(b[1].abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(0.0, 1.0, 1).is_err());
        assert!(IntegratorConfig::new(2.0, 1.0, 1).is_err());
        assert!(IntegratorConfig::new(0.1, 1.0, 0).is_err());
        assert_eq!(IntegratorConfig::new(1e-3, 1.0, 1).unwrap().step_count(), 1000);
        assert_eq!(IntegratorConfig::new(0.3, 1.0, 1).unwrap().step_count(), 4);
    }

    #[test]
    fn free_particle_moves_in_a_straight_line() {
        let params = ParticleParams::new(1.0, 0.0).unwrap();
        let u = Vector4::new(1.0, 0.5, 0.0, 0.0);
        let start = GeodesicState::at_origin(u).unwrap();
        let cfg = IntegratorConfig::new(0.01, 1.0, 10).unwrap();
        let traj = integrate(&free(), &params, &start, &cfg).unwrap();
        assert_eq!(traj.samples.len(), 11);
        for s in &traj.samples {
            let x = s.state.base().coords();
            assert_abs_diff_eq!(*x, u * s.t, epsilon = 1e-14);
            assert_eq!(s.state.velocity, u);
        }
        assert_eq!(traj.last().t, 1.0);
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn uneven_final_step_lands_on_t_end() {
        let params = ParticleParams::new(1.0, 0.0).unwrap();
        let start = GeodesicState::at_origin(Vector4::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        let cfg = IntegratorConfig::new(0.3, 1.0, 2).unwrap();
        let traj = integrate(&free(), &params, &start, &cfg).unwrap();
        let ts: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.6, 1.0]);
        assert_abs_diff_eq!(traj.last().state.base().coords()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn magnetic_scenario_matches_closed_form() {
        let dist = FramedDistribution::flat_magnetic(1.0);
        let params = ParticleParams::new(1.0, 2.0).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, 1).unwrap();
        let traj = integrate(&dist, &params, &magnetic_start(0.0), &cfg).unwrap();
        let err = max_error_vs_closed_form(&traj, 0.0, 2.0, 1.0);
        assert!(err < 1e-10, "max error {err:e}");
        assert!(traj.max_pseudonorm_drift() < 1e-10);
        assert!(traj.max_horizontality_defect() < 1e-12);
        let end = traj.last().state.base().coords();
        let b = MagneticGeodesicParams::canonical(0.0, 2.0, 1.0).constants();
        assert_abs_diff_eq!((end[2] - b.0).hypot(end[3] - b.1), 0.5, epsilon = 1e-10);
        // p₄ is the charge at every sample
        assert!(traj.samples.iter().all(|s| s.momentum.unwrap()[4] == 2.0));
    }

    #[test]
    fn rk4_step_halving_ratio() {
        let dist = FramedDistribution::flat_magnetic(1.0);
        let params = ParticleParams::new(1.0, 2.0 * std::f64::consts::PI).unwrap();
        let err = |h: f64| {
            let cfg = IntegratorConfig::new(h, 1.0, 1).unwrap();
            let traj = integrate(&dist, &params, &magnetic_start(0.7), &cfg).unwrap();
            max_error_vs_closed_form(&traj, 0.7, 2.0 * std::f64::consts::PI, 1.0)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn canonical_momenta_are_conserved_in_cyclic_directions() {
        // A and g do not depend on x⁰, x¹: p₀, p₁ are integrals of motion
        let dist = FramedDistribution::flat_magnetic(1.5);
        let params = ParticleParams::new(2.0, 1.0).unwrap();
        let start = GeodesicState::at_origin(Vector4::new(1.8, 0.3, 0.5, -0.4)).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 2.0, 50).unwrap();
        let traj = integrate(&dist, &params, &start, &cfg).unwrap();
        let p0 = traj.first().momentum.unwrap();
        for s in &traj.samples {
            let p = s.momentum.unwrap();
            assert_abs_diff_eq!(p[0], p0[0], epsilon = 1e-10);
            assert_abs_diff_eq!(p[1], p0[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn curved_metric_conserves_pseudonorm() {
        let metric = DistributionMetric::from_fn(|x| {
            Matrix4::from_diagonal(&Vector4::new(1.0, -(0.4 * x[1]).exp(), -1.0 - 0.1 * x[0] * x[0], -1.0))
        })
        .with_jacobian(|x| {
            let mut d = [Matrix4::zeros(); 4];
            d[1][(1, 1)] = -0.4 * (0.4 * x[1]).exp();
            d[0][(2, 2)] = -0.2 * x[0];
            d
        });
        let dist = FramedDistribution::new(PotentialField::constant_magnetic(0.7), metric);
        let params = ParticleParams::new(1.0, 1.3).unwrap();
        let start = GeodesicState::at_origin(Vector4::new(1.6, 0.4, 0.3, -0.5)).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, 10).unwrap();
        let traj = integrate(&dist, &params, &start, &cfg).unwrap();
        assert!(traj.max_pseudonorm_drift() < 1e-9, "{:e}", traj.max_pseudonorm_drift());
    }

    #[test]
    fn formulations_agree_along_trajectories() {
        let f = crate::fields::FaradayTensor::from_fields([0.4, -0.2, 0.9], [0.3, 1.1, -0.5]);
        let dist = FramedDistribution::new(PotentialField::uniform_field(&f), DistributionMetric::minkowski());
        let params = ParticleParams::new(1.5, -0.8).unwrap();
        let start = GeodesicState::at_origin(Vector4::new(1.7, 0.2, -0.3, 0.6)).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, 5).unwrap();
        let a = integrate(&dist, &params, &start, &cfg).unwrap();
        let b = integrate_lagrange(&dist, &params, &start, &cfg, params.charge()).unwrap();
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((sa.state.to_vector() - sb.state.to_vector()).amax() < 1e-8);
        }
    }

    #[test]
    fn divergence_reports_last_good_time() {
        // g₀₀ = 1/(1 − x⁰)² blows up at x⁰ = 1
        let metric = DistributionMetric::from_fn(|x| {
            Matrix4::from_diagonal(&Vector4::new(1.0 / (1.0 - x[0]).powi(2), -1.0, -1.0, -1.0))
        });
        let dist = FramedDistribution::new(PotentialField::zero(), metric);
        let params = ParticleParams::new(1.0, 0.0).unwrap();
        let start = GeodesicState::at_origin(Vector4::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        let cfg = IntegratorConfig::new(0.01, 5.0, 1).unwrap();
        match integrate(&dist, &params, &start, &cfg) {
            Err(Error::Divergence { last_good_t }) => assert!(last_good_t > 0.0 && last_good_t < 5.0),
            Err(Error::Signature { .. }) | Err(Error::Degenerate { .. }) => {}
            other => panic!("expected failure, got {:?}", other.map(|t| t.last().t)),
        }
    }

    #[test]
    fn gauge_checks() {
        let params = ParticleParams::new(1.0, 2.0).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, 1).unwrap();

        let dist = FramedDistribution::flat_magnetic(1.0);
        let r = gauge_transform_check(&dist, &params, &magnetic_start(0.3), &cfg, &Polynomial4::constant(5.0))
            .unwrap();
        assert_eq!(r.base_deviation, 0.0);
        assert_eq!(r.fiber_deviation, 0.0);

        let x2sq = Polynomial4::new(vec![Monomial::new(1.0, [0, 0, 2, 0])]);
        let r = gauge_transform_check(&dist, &params, &magnetic_start(0.3), &cfg, &x2sq).unwrap();
        assert!(r.base_deviation < 1e-10, "{r:?}");
        assert!(r.fiber_deviation < 1e-9, "{r:?}");

        let x0x1 = Polynomial4::new(vec![Monomial::new(1.0, [1, 1, 0, 0])]);
        let start = GeodesicState::at_origin(Vector4::new(1.2, 0.4, 0.1, 0.0)).unwrap();
        let r = gauge_transform_check(&free(), &params, &start, &cfg, &x0x1).unwrap();
        assert!(r.base_deviation < 1e-10 && r.fiber_deviation < 1e-9, "{r:?}");
    }

    #[test]
    fn action_examples() {
        let params = ParticleParams::new(2.0, 0.0).unwrap();
        let start = GeodesicState::at_origin(Vector4::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        let cfg = IntegratorConfig::new(0.1, 1.0, 1).unwrap();
        let traj = integrate(&free(), &params, &start, &cfg).unwrap();
        let a = action_values(&free(), &params, &traj, 3.0).unwrap();
        assert_abs_diff_eq!(a.length_part, -2.0 * 3.0, epsilon = 1e-14);
        assert_eq!(a.coupling_part, 0.0);

        let spacelike = GeodesicState::at_origin(Vector4::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        let traj = integrate(&free(), &params, &spacelike, &cfg).unwrap();
        assert!(matches!(
            action_values(&free(), &params, &traj, 1.0),
            Err(Error::Causality { index: 0, .. })
        ));
    }

    #[test]
    fn coupling_term_matches_dense_quadrature() {
        let (phi, c, alpha) = (1.0, 2.0, 0.4);
        let dist = FramedDistribution::flat_magnetic(phi);
        let params = ParticleParams::new(1.0, 2.0).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, 1).unwrap();
        let traj = integrate(&dist, &params, &magnetic_start(alpha), &cfg).unwrap();
        let a = action_values(&dist, &params, &traj, c).unwrap();

        // −(q/c) ∫ φ x³ u² dt on the closed form, 10⁶ midpoint cells
        let g = MagneticGeodesicParams::canonical(alpha, 2.0, phi);
        let n = 1_000_000;
        let dt = 1.0 / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * dt;
                let x3 = closed_form(&g, t)[1];
                phi * x3 * g.planar_velocity(t).0 * dt
            })
            .sum();
        let oracle = -(params.charge() / c) * integral;
        assert_abs_diff_eq!(a.coupling_part, oracle, epsilon = 1e-6);
    }
}
