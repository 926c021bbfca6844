//! The trajectory-wave ordering interaction: a second-order ODE system
//! coupling particle velocity to the field ray velocity u with damping
//! rate F,
//!
//!   d(pos)/dt = vel
//!   d(vel)/dt = J_u vel - (vel - u) F
//!
//! where J_u vel is du/dt expanded along the trajectory for the static
//! monochromatic fields used here. Integration runs as a first-order
//! 4-state system with either fixed RK4 or adaptive RKF45, and screen
//! crossings are located on a degree-5 interpolant of the accepted steps.

mod integrate;
mod interp;
mod stepper;

pub use integrate::{integrate, Bounds, IntegrateError, StopSet, TraceSample};
pub use interp::{screen_crossing, CrossingError, StepRecord, StepSample};
pub use stepper::{rk4_step, rkf45_step, RkfStep};

use crate::geom::{Mat2, Vec2};
use crate::wavefield::{
    ordering_rate, ray_velocity, ray_velocity_jacobian, FieldError, ScalarField, NODAL_FLOOR_REL,
    RAY_AMPLITUDE,
};
use serde::{Deserialize, Serialize};

/// Particle position, velocity, and time along one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub pos: Vec2,
    pub vel: Vec2,
    pub t: f64,
}

impl TrajectoryState {
    pub fn new(pos: Vec2, vel: Vec2) -> Self {
        TrajectoryState { pos, vel, t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite() && self.t.is_finite()
    }
}

/// Local field quantities entering the trajectory equations.
#[derive(Debug, Clone, Copy)]
pub struct RayDynamics {
    /// Ray velocity u.
    pub u: Vec2,
    /// Spatial Jacobian du_i/dx_j.
    pub jac: Mat2,
    /// Ordering rate F >= 0.
    pub rate: f64,
}

/// Source of (u, J_u, F) at a point. Implementations must be pure and
/// shareable across workers.
pub trait RayDynamicsProvider: Sync {
    fn dynamics_at(&self, pos: Vec2) -> Result<RayDynamics, FieldError>;
}

/// Standard provider backed by a scalar field: u from the phase gradient
/// (amplitude A = c/k), F = gamma |psi|^2 / I_ref.
pub struct TwoiField<'a> {
    field: &'a dyn ScalarField,
    gamma: f64,
    intensity_ref: f64,
    psi_floor: f64,
}

impl<'a> TwoiField<'a> {
    pub fn new(field: &'a dyn ScalarField, gamma: f64, intensity_ref: f64) -> Self {
        assert!(intensity_ref > 0.0);
        assert!(gamma >= 0.0);
        TwoiField { field, gamma, intensity_ref, psi_floor: NODAL_FLOOR_REL * intensity_ref }
    }

    pub fn field(&self) -> &dyn ScalarField {
        self.field
    }
}

impl RayDynamicsProvider for TwoiField<'_> {
    fn dynamics_at(&self, pos: Vec2) -> Result<RayDynamics, FieldError> {
        let s = self.field.sample(pos)?;
        let u = ray_velocity(&s, RAY_AMPLITUDE, self.psi_floor)?;
        let jac = ray_velocity_jacobian(&s, RAY_AMPLITUDE, self.psi_floor)?;
        let rate = ordering_rate(&s, self.gamma, self.intensity_ref);
        Ok(RayDynamics { u, jac, rate })
    }
}

/// Right-hand side of the first-order system at a state.
pub fn twoi_rhs(
    provider: &dyn RayDynamicsProvider,
    state: &TrajectoryState,
) -> Result<(Vec2, Vec2), FieldError> {
    let d = provider.dynamics_at(state.pos)?;
    let dvel = d.jac.mul_vec(state.vel) - (state.vel - d.u).scale(d.rate);
    Ok((state.vel, dvel))
}

/// Integration method selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Rk4Fixed,
    Rkf45Adaptive,
}

/// Integrator settings. `h_init` is the fixed step for `Rk4Fixed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: u64,
    /// Attractor stop: |vel - u| <= attractor_tol * |vel(0) - u(0)|.
    pub attractor_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rkf45Adaptive,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_init: 0.05,
            h_min: 1e-9,
            h_max: 10.0,
            max_steps: 1_000_000,
            attractor_tol: 1e-5,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(format!(
                "step bounds must satisfy 0 < h_min <= h_init <= h_max, got {} / {} / {}",
                self.h_min, self.h_init, self.h_max
            ));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.attractor_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        Ok(())
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    /// Crossed the screen plane; interpolated crossing point and time.
    ScreenHit { y: f64, t: f64 },
    /// Velocity aligned with u to within the configured tolerance.
    AttractorReached,
    /// Blocked at the mask (assigned by scenario-level propagation).
    Absorbed,
    OutOfBounds,
    StepBudgetExhausted,
    /// Entered a field node or singular region where the dynamics are
    /// undefined; counted in diagnostics, never silently dropped.
    NodalHalt,
}

/// Result of one trajectory integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryResult {
    pub outcome: Outcome,
    pub final_state: TrajectoryState,
    /// |vel - u| / |vel(0) - u(0)| at termination (0 when launched attached).
    pub attractor_residual: f64,
    /// Accepted steps.
    pub steps_taken: u64,
    /// Rejected RKF45 attempts.
    pub steps_rejected: u64,
}

#[cfg(test)]
pub(crate) mod test_providers {
    use super::*;

    /// Spatially uniform dynamics: constant u and F, zero Jacobian.
    pub struct UniformDynamics {
        pub u: Vec2,
        pub rate: f64,
    }

    impl RayDynamicsProvider for UniformDynamics {
        fn dynamics_at(&self, _pos: Vec2) -> Result<RayDynamics, FieldError> {
            Ok(RayDynamics { u: self.u, jac: Mat2::ZERO, rate: self.rate })
        }
    }
}
