//! Closed-form fields used for validation and as building blocks in tests.

use super::{FieldError, FieldSample, ScalarField};
use crate::geom::Vec2;
use num_complex::Complex64;

/// Unit-amplitude plane wave psi = e^{i k . x}.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveField {
    k_vec: Vec2,
}

impl PlaneWaveField {
    pub fn new(k_vec: Vec2) -> Self {
        PlaneWaveField { k_vec }
    }

    pub fn k_vec(&self) -> Vec2 {
        self.k_vec
    }
}

impl ScalarField for PlaneWaveField {
    fn sample(&self, pos: Vec2) -> Result<FieldSample, FieldError> {
        let phase = self.k_vec.dot(pos);
        let psi = Complex64::from_polar(1.0, phase);
        let i = Complex64::i();
        Ok(FieldSample {
            psi,
            grad_y: i * self.k_vec.y * psi,
            grad_z: i * self.k_vec.z * psi,
            hess_yy: -self.k_vec.y * self.k_vec.y * psi,
            hess_yz: -self.k_vec.y * self.k_vec.z * psi,
            hess_zz: -self.k_vec.z * self.k_vec.z * psi,
        })
    }
}

/// Pointwise sum of component fields (superposition).
pub struct FieldSum(pub Vec<Box<dyn ScalarField>>);

impl ScalarField for FieldSum {
    fn sample(&self, pos: Vec2) -> Result<FieldSample, FieldError> {
        let mut acc = FieldSample::ZERO;
        let one = Complex64::new(1.0, 0.0);
        for f in &self.0 {
            acc.add_weighted(one, &f.sample(pos)?);
        }
        Ok(acc)
    }
}
