//! Independent oracles shared by the integration tests.
//!
//! Everything here recomputes expected values through a different route
//! than the library: plain central finite differences for derivatives, and
//! a from-scratch trapezoid aperture integral for diffracted fields.

#![allow(dead_code)]

use num_complex::Complex64;
use twoi_sim::geom::Vec2;
use twoi_sim::wavefield::{FieldSample, KernelKind, ScalarField};

pub const FD_STEP: f64 = 1e-4;

pub fn rel_err(got: f64, want: f64, scale: f64) -> f64 {
    (got - want).abs() / want.abs().max(scale)
}

pub fn rel_err_c(got: Complex64, want: Complex64, scale: f64) -> f64 {
    (got - want).norm() / want.norm().max(scale)
}

fn psi(field: &dyn ScalarField, pos: Vec2) -> Complex64 {
    field.sample(pos).expect("oracle probe must be evaluable").psi
}

/// Central-difference gradient of psi.
pub fn fd_grad(field: &dyn ScalarField, pos: Vec2, h: f64) -> [Complex64; 2] {
    let dy = (psi(field, pos + Vec2::new(h, 0.0)) - psi(field, pos - Vec2::new(h, 0.0)))
        / (2.0 * h);
    let dz = (psi(field, pos + Vec2::new(0.0, h)) - psi(field, pos - Vec2::new(0.0, h)))
        / (2.0 * h);
    [dy, dz]
}

/// Central-difference Hessian of psi (yy, yz, zz).
pub fn fd_hess(field: &dyn ScalarField, pos: Vec2, h: f64) -> [Complex64; 3] {
    let c = psi(field, pos);
    let yy = (psi(field, pos + Vec2::new(h, 0.0)) - 2.0 * c + psi(field, pos - Vec2::new(h, 0.0)))
        / (h * h);
    let zz = (psi(field, pos + Vec2::new(0.0, h)) - 2.0 * c + psi(field, pos - Vec2::new(0.0, h)))
        / (h * h);
    let yz = (psi(field, pos + Vec2::new(h, h)) - psi(field, pos + Vec2::new(h, -h))
        - psi(field, pos + Vec2::new(-h, h))
        + psi(field, pos - Vec2::new(h, h)))
        / (4.0 * h * h);
    [yy, yz, zz]
}

/// Worst relative error of the analytic sample derivatives against central
/// finite differences, scaled by the local field magnitude.
pub fn derivative_consistency(field: &dyn ScalarField, pos: Vec2, h: f64) -> f64 {
    let s: FieldSample = field.sample(pos).expect("probe evaluable");
    let scale = s.psi.norm().max(1e-30);
    let g = fd_grad(field, pos, h);
    let hs = fd_hess(field, pos, h);
    let k = twoi_sim::wavefield::WAVENUMBER;
    let mut worst: f64 = 0.0;
    worst = worst.max(rel_err_c(s.grad_y, g[0], scale * k));
    worst = worst.max(rel_err_c(s.grad_z, g[1], scale * k));
    worst = worst.max(rel_err_c(s.hess_yy, hs[0], scale * k * k));
    worst = worst.max(rel_err_c(s.hess_yz, hs[1], scale * k * k));
    worst = worst.max(rel_err_c(s.hess_zz, hs[2], scale * k * k));
    worst
}

/// 4th-order (5-point) central differences, for probes where the phase
/// argument kr is large enough that the 3-point stencil's rounding floor
/// exceeds the target accuracy.
pub fn fd_grad4(field: &dyn ScalarField, pos: Vec2, h: f64) -> [Complex64; 2] {
    let d1 = |dir: Vec2| -> Complex64 {
        (-psi(field, pos + dir.scale(2.0 * h)) + psi(field, pos + dir.scale(h)) * 8.0
            - psi(field, pos - dir.scale(h)) * 8.0
            + psi(field, pos - dir.scale(2.0 * h)))
            / (12.0 * h)
    };
    [d1(Vec2::new(1.0, 0.0)), d1(Vec2::new(0.0, 1.0))]
}

pub fn fd_hess4(field: &dyn ScalarField, pos: Vec2, h: f64) -> [Complex64; 3] {
    let d2 = |dir: Vec2| -> Complex64 {
        (-psi(field, pos + dir.scale(2.0 * h)) + psi(field, pos + dir.scale(h)) * 16.0
            - psi(field, pos) * 30.0
            + psi(field, pos - dir.scale(h)) * 16.0
            - psi(field, pos - dir.scale(2.0 * h)))
            / (12.0 * h * h)
    };
    // mixed derivative: the 4th-order first-derivative stencil applied twice
    let w = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    let mut yz = Complex64::new(0.0, 0.0);
    for (oy, wy) in w {
        for (oz, wz) in w {
            yz += psi(field, pos + Vec2::new(oy * h, oz * h)) * (wy * wz / (h * h));
        }
    }
    [d2(Vec2::new(1.0, 0.0)), yz, d2(Vec2::new(0.0, 1.0))]
}

/// Worst relative error using the 4th-order stencils.
pub fn derivative_consistency4(field: &dyn ScalarField, pos: Vec2, h: f64) -> f64 {
    let s: FieldSample = field.sample(pos).expect("probe evaluable");
    let scale = s.psi.norm().max(1e-30);
    let g = fd_grad4(field, pos, h);
    let hs = fd_hess4(field, pos, h);
    let k = twoi_sim::wavefield::WAVENUMBER;
    let mut worst: f64 = 0.0;
    worst = worst.max(rel_err_c(s.grad_y, g[0], scale * k));
    worst = worst.max(rel_err_c(s.grad_z, g[1], scale * k));
    worst = worst.max(rel_err_c(s.hess_yy, hs[0], scale * k * k));
    worst = worst.max(rel_err_c(s.hess_yz, hs[1], scale * k * k));
    worst = worst.max(rel_err_c(s.hess_zz, hs[2], scale * k * k));
    worst
}

/// Finite-difference phase gradient: d(arg psi)/dx via the branch-safe
/// log-ratio, times the ray amplitude A.
pub fn fd_phase_velocity(field: &dyn ScalarField, pos: Vec2, h: f64) -> Vec2 {
    let a = twoi_sim::wavefield::RAY_AMPLITUDE;
    let dphi = |p1: Vec2, p0: Vec2| -> f64 {
        let r = psi(field, p1) / psi(field, p0);
        r.arg()
    };
    let uy = a * dphi(pos + Vec2::new(h, 0.0), pos - Vec2::new(h, 0.0)) / (2.0 * h);
    let uz = a * dphi(pos + Vec2::new(0.0, h), pos - Vec2::new(0.0, h)) / (2.0 * h);
    Vec2::new(uy, uz)
}

/// From-scratch aperture integral: incident cylindrical/spherical wave from
/// `source` through the `openings` (at z = 0), trapezoid rule at
/// `samples_per_lambda` points per wavelength. Reassembles the kernel
/// formulas inline rather than calling the library quadrature.
pub fn oracle_diffracted_psi(
    source: Vec2,
    kernel: KernelKind,
    openings: &[(f64, f64)],
    pos: Vec2,
    samples_per_lambda: usize,
) -> Complex64 {
    let k = std::f64::consts::TAU;
    let kern = |r: f64| -> Complex64 {
        match kernel {
            KernelKind::Kernel3D => Complex64::from_polar(1.0 / r, k * r),
            KernelKind::Kernel2DAsymptotic => {
                Complex64::from_polar(1.0 / r.sqrt(), k * r + std::f64::consts::FRAC_PI_4)
            }
        }
    };
    // stationary-phase normalization sqrt(k/2pi) e^{-i pi/4}
    let norm = Complex64::from_polar((k / std::f64::consts::TAU).sqrt(), -std::f64::consts::FRAC_PI_4);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(lo, hi) in openings {
        let n = (((hi - lo) * samples_per_lambda as f64).ceil() as usize).max(2);
        let dy = (hi - lo) / n as f64;
        for i in 0..=n {
            let y = lo + i as f64 * dy;
            let q = Vec2::new(y, 0.0);
            let r_s = (q - source).norm();
            let r_p = (pos - q).norm();
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += kern(r_s) * kern(r_p) * (w * dy);
        }
    }
    acc * norm
}

pub fn oracle_diffracted_intensity(
    source: Vec2,
    kernel: KernelKind,
    openings: &[(f64, f64)],
    pos: Vec2,
    samples_per_lambda: usize,
) -> f64 {
    oracle_diffracted_psi(source, kernel, openings, pos, samples_per_lambda).norm_sqr()
}
