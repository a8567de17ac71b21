//! Abnormal directions: velocities annihilated by F, `Σⱼ F_jk uʲ = 0`.

use nalgebra::{Matrix4, Vector4};

use crate::fields::FaradayTensor;

/// Singular values at or below `RANK_TOL · σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AbnormalKernel {
    /// Euclidean-orthonormal basis of ker F.
    pub basis: Vec<Vector4<f64>>,
    pub rank_f: usize,
    /// Descending.
    pub singular_values: [f64; 4],
}

impl AbnormalKernel {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

/// `max_k |Σ_j F_jk uʲ|`
pub fn abnormal_residual(f: &FaradayTensor, u: &Vector4<f64>) -> f64 {
    (f.matrix().transpose() * u).amax()
}

pub fn abnormal_kernel(f: &FaradayTensor) -> AbnormalKernel {
    // uʲ F_jk = 0 for all k  ⇔  Fᵀ u = 0; F is antisymmetric so ker Fᵀ = ker F
    let m = f.matrix().transpose();
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: [f64; 4] = std::array::from_fn(|i| svd.singular_values[order[i]]);
    let sigma_max = sv[0];

    if sigma_max == 0.0 {
        return AbnormalKernel {
            basis: (0..4).map(|i| Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })).collect(),
            rank_f: 0,
            singular_values: sv,
        };
    }
    let cutoff = RANK_TOL * sigma_max;
    let rank_f = sv.iter().filter(|&&s| s > cutoff).count();
    let basis = order[rank_f..]
        .iter()
        .map(|&i| v_t.row(i).transpose().normalize())
        .collect();
    AbnormalKernel {
        basis,
        rank_f,
        singular_values: sv,
    }
}

fn projector(basis: &[Vector4<f64>]) -> Matrix4<f64> {
    basis.iter().map(|v| v * v.transpose()).sum()
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal bases (1 when the dimensions differ).
pub fn subspace_distance(a: &[Vector4<f64>], b: &[Vector4<f64>]) -> f64 {
    if a.len() != b.len() {
        return 1.0;
    }
    let d = projector(a) - projector(b);
    d.svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize) -> Vector4<f64> {
        Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn zero_field_has_full_kernel() {
        let k = abnormal_kernel(&FaradayTensor::zero());
        assert_eq!(k.rank_f, 0);
        assert_eq!(k.dimension(), 4);
        assert!(subspace_distance(&k.basis, &[e(0), e(1), e(2), e(3)]) < 1e-15);
    }

    #[test]
    fn magnetic_kernel_is_e0_e1() {
        for phi in [1.0, -3.0, 1e-3, 250.0] {
            let f = FaradayTensor::from_fields([0.0; 3], [phi, 0.0, 0.0]);
            let k = abnormal_kernel(&f);
            assert_eq!(k.rank_f, 2);
            assert_eq!(k.dimension(), 2);
            assert!(subspace_distance(&k.basis, &[e(0), e(1)]) < 1e-10);
            for v in &k.basis {
                assert!(abnormal_residual(&f, v) <= 1e-12 * k.singular_values[0]);
            }
        }
    }

    #[test]
    fn generic_field_has_trivial_kernel() {
        let f = FaradayTensor::from_fields([0.3, -1.2, 0.8], [1.1, 0.4, -0.6]);
        let eh: f64 = 0.3 * 1.1 - 1.2 * 0.4 - 0.8 * 0.6;
        assert!((f.determinant() - eh * eh).abs() < 1e-12);
        let k = abnormal_kernel(&f);
        assert_eq!(k.rank_f, 4);
        assert!(k.basis.is_empty());
    }

    #[test]
    fn crossed_fields_with_zero_invariant_have_rank_two() {
        // E ⊥ H gives det F = (E·H)² = 0
        let f = FaradayTensor::from_fields([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]);
        let k = abnormal_kernel(&f);
        assert_eq!(k.rank_f, 2);
        for v in &k.basis {
            assert!(abnormal_residual(&f, v) <= 1e-12 * k.singular_values[0]);
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
        assert!(k.basis[0].dot(&k.basis[1]).abs() < 1e-14);
    }

    #[test]
    fn subspace_distance_detects_rotation() {
        let angle: f64 = 0.1;
        let r = Vector4::new(angle.cos(), 0.0, angle.sin(), 0.0);
        let d = subspace_distance(&[r, e(1)], &[e(0), e(1)]);
        assert!((d - angle.sin()).abs() < 1e-14);
        assert_eq!(subspace_distance(&[e(0)], &[e(0), e(1)]), 1.0);
    }
}
