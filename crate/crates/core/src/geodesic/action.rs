use crate::error::{Error, Result};
use crate::fields::{quadratic_form, FramedDistribution};

use super::{ParticleParams, Trajectory};

/// The two terms of the classical action, `−mc ∫ √⟨u,u⟩ dt` and `−(q/c) ∫ A·u dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValues {
    pub length_part: f64,
    pub coupling_part: f64,
}

/// Trapezoidal quadrature of both action terms over the recorded samples.
pub fn action_values(
    dist: &FramedDistribution,
    params: &ParticleParams,
    traj: &Trajectory,
    c: f64,
) -> Result<ActionValues> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("speed of light must be > 0, got {c}")));
    }
    let mut length_integrand = Vec::with_capacity(traj.samples.len());
    let mut coupling_integrand = Vec::with_capacity(traj.samples.len());
    for (index, s) in traj.samples.iter().enumerate() {
        let x = s.state.base().coords();
        let u = &s.state.velocity;
        let q = quadratic_form(&dist.metric.value(x), u);
        if !(q > 0.0) {
            return Err(Error::Causality {
                index,
                pseudonorm: q,
            });
        }
        length_integrand.push(q.sqrt());
        coupling_integrand.push(dist.potential.value(x).dot(u));
    }
    let trapz = |ys: &[f64]| -> f64 {
        traj.samples
            .windows(2)
            .zip(ys.windows(2))
            .map(|(w, y)| 0.5 * (w[1].t - w[0].t) * (y[0] + y[1]))
            .sum()
    };
    Ok(ActionValues {
        length_part: -params.mass() * c * trapz(&length_integrand),
        coupling_part: -(params.charge() / c) * trapz(&coupling_integrand),
    })
}
