//! Aperture-diffracted waves: a slit mask illuminated by a point source,
//! propagated by a line integral of secondary sources over the openings
//! (composite Gauss-Legendre quadrature), with the field derivatives taken
//! analytically under the integral.

use super::point_source::{radial_sample, PointSourceField};
use super::{FieldError, FieldSample, ScalarField, WAVENUMBER};
use crate::geom::Vec2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, TAU};
use thiserror::Error;

/// Probes closer than this to the mask plane (or to a quadrature node) are
/// rejected; the secondary-source representation is not meaningful there.
pub const NEAR_PLANE_LIMIT: f64 = 0.1;

/// Default quadrature density along the openings.
pub const DEFAULT_POINTS_PER_WAVELENGTH: usize = 16;

/// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

#[derive(Debug, Error, PartialEq)]
pub enum MaskError {
    #[error("slit width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("mask needs at least one slit")]
    NoSlits,
    #[error("slits overlap: centers {a} and {b} closer than the slit width")]
    Overlap { a: f64, b: f64 },
    #[error("source sits on the transmission side of the mask plane")]
    SourceOnTransmissionSide,
    #[error("source must be at least 1 lambda from the mask plane, got {0}")]
    SourceTooClose(f64),
}

/// Aperture layout: equal-width slits in a plane of constant z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitMask {
    slit_centers: Vec<f64>,
    slit_width: f64,
    plane_z: f64,
}

impl SlitMask {
    pub fn new(slit_centers: Vec<f64>, slit_width: f64, plane_z: f64) -> Result<Self, MaskError> {
        if !(slit_width > 0.0) {
            return Err(MaskError::NonPositiveWidth(slit_width));
        }
        if slit_centers.is_empty() {
            return Err(MaskError::NoSlits);
        }
        let mut sorted = slit_centers.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in sorted.windows(2) {
            if pair[1] - pair[0] < slit_width {
                return Err(MaskError::Overlap { a: pair[0], b: pair[1] });
            }
        }
        Ok(SlitMask { slit_centers: sorted, slit_width, plane_z })
    }

    pub fn slit_centers(&self) -> &[f64] {
        &self.slit_centers
    }

    pub fn slit_width(&self) -> f64 {
        self.slit_width
    }

    pub fn plane_z(&self) -> f64 {
        self.plane_z
    }

    /// Opening intervals (lo, hi) in transverse coordinate, sorted.
    pub fn openings(&self) -> Vec<(f64, f64)> {
        self.slit_centers
            .iter()
            .map(|c| (c - 0.5 * self.slit_width, c + 0.5 * self.slit_width))
            .collect()
    }

    /// Whether a transverse position lies inside an opening (edges included).
    pub fn transmits(&self, y: f64) -> bool {
        self.openings().iter().any(|&(lo, hi)| y >= lo && y <= hi)
    }

    /// Transverse extent of the full slit pattern (outermost edges).
    pub fn span(&self) -> (f64, f64) {
        let o = self.openings();
        (o.first().unwrap().0, o.last().unwrap().1)
    }

    /// Midpoint of the slit pattern.
    pub fn center_y(&self) -> f64 {
        let (lo, hi) = self.span();
        0.5 * (lo + hi)
    }
}

/// Obliquity factor applied to the secondary sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Obliquity {
    #[default]
    None,
    Cosine,
}

struct QuadNode {
    pos: Vec2,
    /// Incident amplitude times quadrature weight times the propagation
    /// normalization constant.
    amp: Complex64,
}

/// A point-source wave diffracted by a slit mask.
///
/// Quadrature nodes and incident values at the mask are precomputed at
/// construction and reused for every evaluation, so building one field per
/// source point and sharing it across a trajectory is cheap.
pub struct DiffractedField {
    source: PointSourceField,
    mask: SlitMask,
    points_per_wavelength: usize,
    obliquity: Obliquity,
    nodes: Vec<QuadNode>,
    /// Incident intensity at the mask-plane center, the reference for the
    /// ordering rate.
    incident_intensity_ref: f64,
}

impl DiffractedField {
    pub fn new(
        source: PointSourceField,
        mask: SlitMask,
        points_per_wavelength: usize,
        obliquity: Obliquity,
    ) -> Result<Self, MaskError> {
        assert!(points_per_wavelength >= 1);
        let offset = (mask.plane_z() - source.origin().z) * source.sense().signum();
        if offset <= 0.0 {
            return Err(MaskError::SourceOnTransmissionSide);
        }
        if offset < 1.0 {
            return Err(MaskError::SourceTooClose(offset));
        }

        // Normalization sqrt(k / 2 pi) e^{-i pi/4}: the stationary-phase
        // constant that makes an unobstructed aperture reproduce free
        // propagation of the incident wave.
        let norm = Complex64::from_polar((WAVENUMBER / TAU).sqrt(), -FRAC_PI_4);

        let kernel = source.kernel_kind();
        let mut nodes = Vec::new();
        for (lo, hi) in mask.openings() {
            let width = hi - lo;
            let panels =
                ((width * points_per_wavelength as f64) / 8.0).ceil().max(1.0) as usize;
            let panel_w = width / panels as f64;
            for p in 0..panels {
                let a = lo + p as f64 * panel_w;
                let mid = a + 0.5 * panel_w;
                let half = 0.5 * panel_w;
                for (x, w) in GL8_X.iter().zip(GL8_W.iter()) {
                    let y = mid + half * x;
                    let pos = Vec2::new(y, mask.plane_z());
                    let r = (pos - source.origin()).norm();
                    let incident = kernel.eval(r).f;
                    nodes.push(QuadNode { pos, amp: incident * (w * half) * norm });
                }
            }
        }

        let center = Vec2::new(mask.center_y(), mask.plane_z());
        let r_center = (center - source.origin()).norm();
        let incident_intensity_ref = kernel.eval(r_center).f.norm_sqr();

        Ok(DiffractedField {
            source,
            mask,
            points_per_wavelength,
            obliquity,
            nodes,
            incident_intensity_ref,
        })
    }

    pub fn with_defaults(source: PointSourceField, mask: SlitMask) -> Result<Self, MaskError> {
        Self::new(source, mask, DEFAULT_POINTS_PER_WAVELENGTH, Obliquity::None)
    }

    pub fn source(&self) -> &PointSourceField {
        &self.source
    }

    pub fn mask(&self) -> &SlitMask {
        &self.mask
    }

    pub fn points_per_wavelength(&self) -> usize {
        self.points_per_wavelength
    }

    pub fn obliquity(&self) -> Obliquity {
        self.obliquity
    }

    /// Incident |psi|^2 at the mask-plane center.
    pub fn incident_intensity_ref(&self) -> f64 {
        self.incident_intensity_ref
    }

    fn accumulate(&self, pos: Vec2) -> Result<FieldSample, FieldError> {
        let kernel = self.source.kernel_kind();
        let s = self.source.sense().signum();
        let mut acc = FieldSample::ZERO;
        for node in &self.nodes {
            let d = pos - node.pos;
            let r = d.norm();
            if r < NEAR_PLANE_LIMIT {
                return Err(FieldError::SingularPoint { r });
            }
            let base = radial_sample(kernel.eval(r), node.pos, pos);
            match self.obliquity {
                Obliquity::None => acc.add_weighted(node.amp, &base),
                Obliquity::Cosine => {
                    let cos = obliquity_weighted(&base, d, r, s);
                    acc.add_weighted(node.amp, &cos);
                }
            }
        }
        Ok(acc)
    }
}

/// Multiply a radial sample by the cosine obliquity factor g = s d_z / r,
/// propagating the factor through the first and second derivatives.
fn obliquity_weighted(base: &FieldSample, d: Vec2, r: f64, s: f64) -> FieldSample {
    let ny = d.y / r;
    let nz = d.z / r;
    let g = s * nz;
    // dg_i = s (delta_iz - n_z n_i) / r
    let g_y = s * (-nz * ny) / r;
    let g_z = s * (1.0 - nz * nz) / r;
    // d2g_ij = (s/r^2) (3 n_z n_i n_j - delta_iz n_j - delta_jz n_i - n_z delta_ij)
    let r2 = r * r;
    let g_yy = s / r2 * nz * (3.0 * ny * ny - 1.0);
    let g_yz = s / r2 * ny * (3.0 * nz * nz - 1.0);
    let g_zz = s / r2 * 3.0 * nz * (nz * nz - 1.0);
    FieldSample {
        psi: base.psi * g,
        grad_y: base.grad_y * g + base.psi * g_y,
        grad_z: base.grad_z * g + base.psi * g_z,
        hess_yy: base.hess_yy * g + base.grad_y * (2.0 * g_y) + base.psi * g_yy,
        hess_yz: base.hess_yz * g + base.grad_y * g_z + base.grad_z * g_y + base.psi * g_yz,
        hess_zz: base.hess_zz * g + base.grad_z * (2.0 * g_z) + base.psi * g_zz,
    }
}

impl std::fmt::Debug for DiffractedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiffractedField")
            .field("source", &self.source)
            .field("mask", &self.mask)
            .field("points_per_wavelength", &self.points_per_wavelength)
            .field("obliquity", &self.obliquity)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl ScalarField for DiffractedField {
    fn sample(&self, pos: Vec2) -> Result<FieldSample, FieldError> {
        let offset = (pos.z - self.mask.plane_z()) * self.source.sense().signum();
        if offset < NEAR_PLANE_LIMIT {
            return Err(FieldError::WrongSide);
        }
        self.accumulate(pos)
    }
}
