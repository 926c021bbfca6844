//! Outgoing point-source waves.

use super::{FieldError, FieldSample, ScalarField, WAVENUMBER};
use crate::geom::Vec2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Minimum distance from the source at which evaluation is allowed.
pub const SINGULAR_RADIUS: f64 = 1e-9;

/// Propagation sense along the z axis. Point-source kernels radiate
/// isotropically; the sense records which half-space is "forward" for
/// diffraction geometry checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    PlusZ,
    MinusZ,
}

impl Sense {
    pub fn signum(self) -> f64 {
        match self {
            Sense::PlusZ => 1.0,
            Sense::MinusZ => -1.0,
        }
    }
}

/// Radial kernel shape for an outgoing wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// e^{ikr} / r.
    Kernel3D,
    /// r^{-1/2} e^{i(kr + pi/4)}: the cylindrical-wave large-argument form,
    /// the natural choice for the 2-D plane.
    Kernel2DAsymptotic,
}

/// Kernel value and its first/second radial derivatives at distance r.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RadialKernel {
    pub f: Complex64,
    pub df: Complex64,
    pub d2f: Complex64,
}

impl KernelKind {
    pub(crate) fn eval(self, r: f64) -> RadialKernel {
        let (sin_kr, cos_kr) = (WAVENUMBER * r).sin_cos();
        let phase = Complex64::new(cos_kr, sin_kr);
        match self {
            KernelKind::Kernel3D => {
                let f = phase / r;
                // f' = f (ik - 1/r); f'' = f ((ik - 1/r)^2 + 1/r^2)
                let a = Complex64::new(-1.0 / r, WAVENUMBER);
                RadialKernel { f, df: f * a, d2f: f * (a * a + 1.0 / (r * r)) }
            }
            KernelKind::Kernel2DAsymptotic => {
                let f = phase * Complex64::from_polar(1.0 / r.sqrt(), std::f64::consts::FRAC_PI_4);
                // f' = f (ik - 1/(2r)); f'' = f ((ik - 1/(2r))^2 + 1/(2r^2))
                let a = Complex64::new(-0.5 / r, WAVENUMBER);
                RadialKernel { f, df: f * a, d2f: f * (a * a + 0.5 / (r * r)) }
            }
        }
    }
}

/// Build a full field sample for a radially symmetric kernel centered at
/// `origin`, evaluated at `pos`. Shared by point sources and the secondary
/// sources of the aperture integral.
pub(crate) fn radial_sample(kernel: RadialKernel, origin: Vec2, pos: Vec2) -> FieldSample {
    let d = pos - origin;
    let r = d.norm();
    let ny = d.y / r;
    let nz = d.z / r;
    // grad_i = f' n_i; H_ij = f'' n_i n_j + f' (delta_ij - n_i n_j) / r
    let fp_over_r = kernel.df / r;
    FieldSample {
        psi: kernel.f,
        grad_y: kernel.df * ny,
        grad_z: kernel.df * nz,
        hess_yy: kernel.d2f * (ny * ny) + fp_over_r * (1.0 - ny * ny),
        hess_yz: kernel.d2f * (ny * nz) - fp_over_r * (ny * nz),
        hess_zz: kernel.d2f * (nz * nz) + fp_over_r * (1.0 - nz * nz),
    }
}

/// Monochromatic outgoing wave centered at a source point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSourceField {
    origin: Vec2,
    sense: Sense,
    kernel: KernelKind,
}

impl PointSourceField {
    pub fn new(origin: Vec2, sense: Sense, kernel: KernelKind) -> Self {
        PointSourceField { origin, sense, kernel }
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn kernel_kind(&self) -> KernelKind {
        self.kernel
    }
}

impl ScalarField for PointSourceField {
    fn sample(&self, pos: Vec2) -> Result<FieldSample, FieldError> {
        let r = (pos - self.origin).norm();
        if r <= SINGULAR_RADIUS {
            return Err(FieldError::SingularPoint { r });
        }
        Ok(radial_sample(self.kernel.eval(r), self.origin, pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{ray_velocity, LIGHT_SPEED, RAY_AMPLITUDE};

    #[test]
    fn kernel3d_on_axis_value() {
        // origin (0,0), pos (0,10): psi = 0.1 e^{i 20 pi} = 0.1 + 0i
        let f = PointSourceField::new(Vec2::ZERO, Sense::PlusZ, KernelKind::Kernel3D);
        let s = f.sample(Vec2::new(0.0, 10.0)).unwrap();
        assert!((s.psi.norm() - 0.1).abs() < 1e-12);
        assert!(s.psi.im.abs() < 1e-12, "phase should be 0 mod 2pi, psi = {}", s.psi);
        assert!((s.psi.re - 0.1).abs() < 1e-12);
    }

    #[test]
    fn phase_gradient_magnitude_is_k() {
        // |Im(psi* grad)/|psi|^2| = k for any outgoing kernel and position,
        // i.e. |ray_velocity| = c exactly.
        for kernel in [KernelKind::Kernel3D, KernelKind::Kernel2DAsymptotic] {
            let f = PointSourceField::new(Vec2::new(0.5, -2.0), Sense::PlusZ, kernel);
            for pos in [Vec2::new(3.0, 4.0), Vec2::new(-7.3, 0.2), Vec2::new(0.5, 11.0)] {
                let s = f.sample(pos).unwrap();
                let u = ray_velocity(&s, RAY_AMPLITUDE, 1e-30).unwrap();
                assert!(
                    (u.norm() - LIGHT_SPEED).abs() < 1e-12,
                    "kernel {kernel:?} pos {pos:?}: |u| = {}",
                    u.norm()
                );
                // and u points radially outward
                let rhat = (pos - f.origin()).unit();
                assert!((u - rhat.scale(LIGHT_SPEED)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn evaluation_at_source_is_singular() {
        let f = PointSourceField::new(Vec2::new(1.0, 2.0), Sense::PlusZ, KernelKind::Kernel3D);
        match f.sample(Vec2::new(1.0, 2.0)) {
            Err(FieldError::SingularPoint { .. }) => {}
            other => panic!("expected SingularPoint, got {other:?}"),
        }
    }
}
