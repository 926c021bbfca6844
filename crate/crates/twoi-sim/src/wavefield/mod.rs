//! Scalar optical fields and the ray-velocity machinery derived from them.
//!
//! Every field exposes the complex amplitude together with its first and
//! second partial derivatives at a point; the ray velocity (phase-gradient
//! velocity), its spatial Jacobian, and the ordering rate are computed from
//! that sample alone.
//!
//! Units: lengths in wavelengths (lambda = 1), speeds in units of c = 1,
//! so k = 2*pi and the ray-velocity amplitude is A = c/k.

mod analytic;
pub mod diffracted;
mod point_source;

pub use analytic::{FieldSum, PlaneWaveField};
pub use diffracted::{DiffractedField, MaskError, Obliquity, SlitMask};
pub use point_source::{KernelKind, PointSourceField, Sense};

use crate::geom::{Mat2, Vec2};
use num_complex::Complex64;
use thiserror::Error;

/// Wavenumber in lambda units.
pub const WAVENUMBER: f64 = std::f64::consts::TAU;
/// Wave speed in lambda-per-time units.
pub const LIGHT_SPEED: f64 = 1.0;
/// Ray-velocity amplitude A = c/k.
pub const RAY_AMPLITUDE: f64 = LIGHT_SPEED / WAVENUMBER;
/// Relative intensity floor below which the phase gradient is treated as
/// degenerate (the ray velocity divides by |psi|^2).
pub const NODAL_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field evaluated within {r} lambda of a source or quadrature node")]
    SingularPoint { r: f64 },
    #[error("field evaluated on the source side of the mask plane")]
    WrongSide,
    #[error("nodal point: |psi|^2 = {intensity} below degeneracy floor")]
    NodalPoint { intensity: f64 },
}

/// Complex field value with its first and second partial derivatives at a
/// point. The Hessian is stored symmetric by construction (one yz entry).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub psi: Complex64,
    pub grad_y: Complex64,
    pub grad_z: Complex64,
    pub hess_yy: Complex64,
    pub hess_yz: Complex64,
    pub hess_zz: Complex64,
}

impl FieldSample {
    pub const ZERO: FieldSample = FieldSample {
        psi: Complex64::new(0.0, 0.0),
        grad_y: Complex64::new(0.0, 0.0),
        grad_z: Complex64::new(0.0, 0.0),
        hess_yy: Complex64::new(0.0, 0.0),
        hess_yz: Complex64::new(0.0, 0.0),
        hess_zz: Complex64::new(0.0, 0.0),
    };

    pub fn intensity(&self) -> f64 {
        self.psi.norm_sqr()
    }

    /// Accumulate `w * other` into this sample.
    pub fn add_weighted(&mut self, w: Complex64, other: &FieldSample) {
        self.psi += w * other.psi;
        self.grad_y += w * other.grad_y;
        self.grad_z += w * other.grad_z;
        self.hess_yy += w * other.hess_yy;
        self.hess_yz += w * other.hess_yz;
        self.hess_zz += w * other.hess_zz;
    }
}

/// A scalar monochromatic field on the (y, z) plane. Implementations are
/// immutable after construction and evaluation is a pure function of
/// (field, pos), so fields are safe to share across trajectory workers.
pub trait ScalarField: Send + Sync {
    fn sample(&self, pos: Vec2) -> Result<FieldSample, FieldError>;

    fn intensity(&self, pos: Vec2) -> Result<f64, FieldError> {
        Ok(self.sample(pos)?.intensity())
    }
}

/// Ray velocity u = -i (A/2) (psi* grad psi - (grad psi*) psi) / |psi|^2,
/// which reduces to A * Im(psi* grad psi) / |psi|^2 — real by construction.
///
/// `psi_floor` is the absolute |psi|^2 threshold below which the point is
/// treated as nodal.
pub fn ray_velocity(s: &FieldSample, amplitude_a: f64, psi_floor: f64) -> Result<Vec2, FieldError> {
    let d = s.psi.norm_sqr();
    if d < psi_floor {
        return Err(FieldError::NodalPoint { intensity: d });
    }
    let c = s.psi.conj();
    Ok(Vec2::new(amplitude_a * (c * s.grad_y).im / d, amplitude_a * (c * s.grad_z).im / d))
}

/// Spatial Jacobian d u_i / d x_j of the ray velocity, by analytic
/// differentiation of the phase-gradient quotient using the field Hessian.
pub fn ray_velocity_jacobian(
    s: &FieldSample,
    amplitude_a: f64,
    psi_floor: f64,
) -> Result<Mat2, FieldError> {
    let d = s.psi.norm_sqr();
    if d < psi_floor {
        return Err(FieldError::NodalPoint { intensity: d });
    }
    let pc = s.psi.conj();
    let n_y = (pc * s.grad_y).im;
    let n_z = (pc * s.grad_z).im;
    // dN_i/dx_j = Im(conj(d_j psi) d_i psi) + Im(conj(psi) H_ij);
    // the first term vanishes for i == j.
    let dn_yy = (pc * s.hess_yy).im;
    let dn_yz = (s.grad_z.conj() * s.grad_y).im + (pc * s.hess_yz).im;
    let dn_zy = (s.grad_y.conj() * s.grad_z).im + (pc * s.hess_yz).im;
    let dn_zz = (pc * s.hess_zz).im;
    let dd_y = 2.0 * (pc * s.grad_y).re;
    let dd_z = 2.0 * (pc * s.grad_z).re;
    let term = |dn: f64, n: f64, dd: f64| amplitude_a * (dn / d - n * dd / (d * d));
    Ok(Mat2::new(
        term(dn_yy, n_y, dd_y),
        term(dn_yz, n_y, dd_z),
        term(dn_zy, n_z, dd_y),
        term(dn_zz, n_z, dd_z),
    ))
}

/// Ordering rate F = gamma * |psi|^2 / I_ref, a non-negative scalar with
/// inverse-time units. Zero field gives F = 0.
pub fn ordering_rate(s: &FieldSample, gain_gamma: f64, intensity_ref: f64) -> f64 {
    assert!(intensity_ref > 0.0, "intensity_ref must be positive");
    assert!(gain_gamma >= 0.0, "gain_gamma must be non-negative");
    gain_gamma * s.psi.norm_sqr() / intensity_ref
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_ray_velocity_is_c_along_k() {
        let f = PlaneWaveField::new(Vec2::new(0.0, WAVENUMBER));
        let s = f.sample(Vec2::new(1.7, -0.4)).unwrap();
        let u = ray_velocity(&s, RAY_AMPLITUDE, 1e-12).unwrap();
        assert!(u.y.abs() < 1e-15);
        assert!((u.z - LIGHT_SPEED).abs() < 1e-15);
    }

    #[test]
    fn real_field_has_zero_ray_velocity() {
        // cos(kz) = (e^{ikz} + e^{-ikz}) / 2 is purely real: the current
        // psi* grad psi - c.c. vanishes identically.
        let f = FieldSum(vec![
            Box::new(PlaneWaveField::new(Vec2::new(0.0, WAVENUMBER))),
            Box::new(PlaneWaveField::new(Vec2::new(0.0, -WAVENUMBER))),
        ]);
        // pick z where cos(kz) is far from zero
        let s = f.sample(Vec2::new(0.3, 0.05)).unwrap();
        let u = ray_velocity(&s, RAY_AMPLITUDE, 1e-16).unwrap();
        assert!(u.norm() < 1e-14, "u = {u:?}");
    }

    #[test]
    fn nodal_point_is_reported() {
        let f = FieldSum(vec![
            Box::new(PlaneWaveField::new(Vec2::new(0.0, WAVENUMBER))),
            Box::new(PlaneWaveField::new(Vec2::new(0.0, -WAVENUMBER))),
        ]);
        // cos(kz) = 0 at z = 1/4
        let s = f.sample(Vec2::new(0.0, 0.25)).unwrap();
        match ray_velocity(&s, RAY_AMPLITUDE, 1e-12) {
            Err(FieldError::NodalPoint { .. }) => {}
            other => panic!("expected NodalPoint, got {other:?}"),
        }
    }

    #[test]
    fn plane_wave_jacobian_is_zero() {
        let f = PlaneWaveField::new(Vec2::new(2.0, 5.0));
        let s = f.sample(Vec2::new(0.9, 2.2)).unwrap();
        let j = ray_velocity_jacobian(&s, RAY_AMPLITUDE, 1e-12).unwrap();
        assert!(j.yy.abs() < 1e-12 && j.yz.abs() < 1e-12);
        assert!(j.zy.abs() < 1e-12 && j.zz.abs() < 1e-12);
    }

    #[test]
    fn spherical_wave_jacobian_matches_radial_form() {
        // u = c r_hat has Jacobian (c/r) (I - r_hat r_hat^T)
        for kernel in [KernelKind::Kernel3D, KernelKind::Kernel2DAsymptotic] {
            let f = PointSourceField::new(Vec2::ZERO, Sense::PlusZ, kernel);
            let pos = Vec2::new(3.0, 4.0);
            let r = pos.norm();
            let rhat = pos.unit();
            let s = f.sample(pos).unwrap();
            let j = ray_velocity_jacobian(&s, RAY_AMPLITUDE, 1e-30).unwrap();
            let expect =
                (Mat2::identity() - Mat2::outer(rhat, rhat)).scale(LIGHT_SPEED / r);
            for (a, b) in [
                (j.yy, expect.yy),
                (j.yz, expect.yz),
                (j.zy, expect.zy),
                (j.zz, expect.zz),
            ] {
                assert!((a - b).abs() < 1e-10, "kernel {kernel:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ordering_rate_examples() {
        let f = PlaneWaveField::new(Vec2::new(0.0, WAVENUMBER));
        let s = f.sample(Vec2::new(0.0, 0.7)).unwrap();
        // |psi|^2 = 1 for a unit plane wave
        assert!((ordering_rate(&s, 1.0, 1.0) - 1.0).abs() < 1e-14);
        assert_eq!(ordering_rate(&FieldSample::ZERO, 3.0, 2.0), 0.0);
    }
}
