//! Trajectory driver: advances one trajectory until the first stop fires.

use super::interp::{screen_crossing, CrossingError, StepRecord, StepSample};
use super::stepper::{rk4_step, rkf45_step};
use super::{
    IntegratorConfig, Method, Outcome, RayDynamics, RayDynamicsProvider, TrajectoryResult,
    TrajectoryState,
};
use crate::geom::Vec2;
use crate::wavefield::{FieldError, LIGHT_SPEED};
use thiserror::Error;

/// Runaway guard: |vel| above this is an integration error.
const MAX_SPEED: f64 = 10.0 * LIGHT_SPEED;

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("integration produced a non-finite state component")]
    NonFiniteState,
    #[error("runaway velocity |vel| = {speed} exceeds 10 c")]
    RunawayVelocity { speed: f64 },
    #[error("field not evaluable at the initial state: {0}")]
    InitialField(FieldError),
    #[error("screen crossing localization failed: {0}")]
    Crossing(CrossingError),
    #[error("invalid integrator config: {0}")]
    BadConfig(String),
}

/// Rectangular termination box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub y: (f64, f64),
    pub z: (f64, f64),
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.y >= self.y.0 && p.y <= self.y.1 && p.z >= self.z.0 && p.z <= self.z.1
    }
}

/// Terminating conditions. The step budget in `IntegratorConfig` always
/// applies, so any combination is a valid stop set.
#[derive(Debug, Clone, Copy, Default)]
pub struct StopSet {
    /// Stop on crossing the plane z = screen_z (either direction).
    pub screen_z: Option<f64>,
    /// Stop on leaving the box.
    pub bounds: Option<Bounds>,
    /// Stop once |vel - u| <= attractor_tol * |vel(0) - u(0)|.
    pub attractor_stop: bool,
}

/// Per-accepted-step trace record streamed to the caller.
#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    pub t: f64,
    pub pos: Vec2,
    pub vel: Vec2,
    /// |vel - u| at this state.
    pub vel_mismatch: f64,
}

fn eval_cached(
    provider: &dyn RayDynamicsProvider,
    cache: &mut Option<(Vec2, RayDynamics)>,
    pos: Vec2,
) -> Result<RayDynamics, FieldError> {
    if let Some((p, d)) = cache {
        if *p == pos {
            return Ok(*d);
        }
    }
    let d = provider.dynamics_at(pos)?;
    *cache = Some((pos, d));
    Ok(d)
}

fn rhs_from(d: &RayDynamics, vel: Vec2) -> [f64; 4] {
    let dvel = d.jac.mul_vec(vel) - (vel - d.u).scale(d.rate);
    [vel.y, vel.z, dvel.y, dvel.z]
}

/// Advance `state0` until the first stop fires.
///
/// Budget exhaustion and field degeneracies mid-run are reported as
/// outcomes (`StepBudgetExhausted`, `NodalHalt`); non-finite or runaway
/// states are hard errors. An optional trace callback receives every
/// accepted step.
pub fn integrate(
    provider: &dyn RayDynamicsProvider,
    state0: TrajectoryState,
    stops: &StopSet,
    cfg: &IntegratorConfig,
    mut trace: Option<&mut dyn FnMut(TraceSample)>,
) -> Result<TrajectoryResult, IntegrateError> {
    cfg.validate().map_err(IntegrateError::BadConfig)?;
    if !state0.is_finite() {
        return Err(IntegrateError::NonFiniteState);
    }

    let mut cache: Option<(Vec2, RayDynamics)> = None;
    let d0 = eval_cached(provider, &mut cache, state0.pos).map_err(IntegrateError::InitialField)?;
    let mismatch0 = (state0.vel - d0.u).norm();
    // launches within rounding of the attractor count as attached
    let attached_floor = 1e-9 * (1.0 + state0.vel.norm());
    let residual_of =
        move |mismatch: f64| if mismatch0 > attached_floor { mismatch / mismatch0 } else { 0.0 };

    let mut state = state0;
    let mut mismatch = mismatch0;
    let mut record = StepRecord::new();
    record.push(StepSample { t: state.t, pos: state.pos, vel: state.vel });
    if let Some(tr) = trace.as_deref_mut() {
        tr(TraceSample { t: state.t, pos: state.pos, vel: state.vel, vel_mismatch: mismatch });
    }

    let mut h = cfg.h_init;
    let mut accepted: u64 = 0;
    let mut rejected: u64 = 0;

    let finish = |outcome: Outcome, state: TrajectoryState, mismatch: f64, acc: u64, rej: u64| {
        TrajectoryResult {
            outcome,
            final_state: state,
            attractor_residual: residual_of(mismatch),
            steps_taken: acc,
            steps_rejected: rej,
        }
    };

    loop {
        // stops evaluated at the current accepted state
        if stops.attractor_stop && residual_of(mismatch) <= cfg.attractor_tol {
            return Ok(finish(Outcome::AttractorReached, state, mismatch, accepted, rejected));
        }
        if let Some(b) = &stops.bounds {
            if !b.contains(state.pos) {
                return Ok(finish(Outcome::OutOfBounds, state, mismatch, accepted, rejected));
            }
        }
        if accepted >= cfg.max_steps {
            return Ok(finish(Outcome::StepBudgetExhausted, state, mismatch, accepted, rejected));
        }

        let y = [state.pos.y, state.pos.z, state.vel.y, state.vel.z];
        let mut rhs = |_t: f64, s: &[f64; 4]| -> Result<[f64; 4], FieldError> {
            let pos = Vec2::new(s[0], s[1]);
            let d = eval_cached(provider, &mut cache, pos)?;
            Ok(rhs_from(&d, Vec2::new(s[2], s[3])))
        };

        let attempt: Result<([f64; 4], f64), FieldError> = match cfg.method {
            Method::Rk4Fixed => {
                rk4_step(state.t, &y, cfg.h_init, &mut rhs).map(|out| (out, cfg.h_init))
            }
            Method::Rkf45Adaptive => loop {
                match rkf45_step(state.t, &y, h, cfg.abs_tol, cfg.rel_tol, &mut rhs) {
                    Err(e) => break Err(e),
                    Ok(step) => {
                        let h_used = h;
                        let factor =
                            (0.9 * step.err_norm.max(1e-16).powf(-0.2)).clamp(0.1, 5.0);
                        h = (h * factor).clamp(cfg.h_min, cfg.h_max);
                        if step.err_norm <= 1.0 || h_used <= cfg.h_min * (1.0 + 1e-12) {
                            break Ok((step.y, h_used));
                        }
                        rejected += 1;
                    }
                }
            },
        };

        let (out, h_used) = match attempt {
            Ok(v) => v,
            // A nodal or singular region reached mid-step halts the
            // trajectory at the last good state.
            Err(_) => return Ok(finish(Outcome::NodalHalt, state, mismatch, accepted, rejected)),
        };

        if out.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFiniteState);
        }
        let new_state = TrajectoryState {
            pos: Vec2::new(out[0], out[1]),
            vel: Vec2::new(out[2], out[3]),
            t: state.t + h_used,
        };
        let speed = new_state.vel.norm();
        if speed > MAX_SPEED {
            return Err(IntegrateError::RunawayVelocity { speed });
        }
        accepted += 1;
        record.push(StepSample { t: new_state.t, pos: new_state.pos, vel: new_state.vel });

        // screen crossing within the step just taken
        if let Some(sz) = stops.screen_z {
            let fa = state.pos.z - sz;
            let fb = new_state.pos.z - sz;
            if fa * fb <= 0.0 && (fa != 0.0 || fb == 0.0) {
                let (t_star, y_star) =
                    screen_crossing(&record, sz).map_err(IntegrateError::Crossing)?;
                let mismatch_end = match eval_cached(provider, &mut cache, new_state.pos) {
                    Ok(d) => (new_state.vel - d.u).norm(),
                    Err(_) => mismatch,
                };
                if let Some(tr) = trace.as_deref_mut() {
                    tr(TraceSample {
                        t: new_state.t,
                        pos: new_state.pos,
                        vel: new_state.vel,
                        vel_mismatch: mismatch_end,
                    });
                }
                return Ok(finish(
                    Outcome::ScreenHit { y: y_star, t: t_star },
                    new_state,
                    mismatch_end,
                    accepted,
                    rejected,
                ));
            }
        }

        match eval_cached(provider, &mut cache, new_state.pos) {
            Ok(d) => mismatch = (new_state.vel - d.u).norm(),
            Err(_) => {
                return Ok(finish(Outcome::NodalHalt, new_state, mismatch, accepted, rejected))
            }
        }
        state = new_state;
        if let Some(tr) = trace.as_deref_mut() {
            tr(TraceSample { t: state.t, pos: state.pos, vel: state.vel, vel_mismatch: mismatch });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_providers::UniformDynamics;
    use super::*;
    use crate::twoi::TwoiField;
    use crate::wavefield::{KernelKind, PointSourceField, ScalarField, Sense, LIGHT_SPEED};

    #[test]
    fn radial_launch_hits_geometric_projection() {
        // vel(0) = u in a spherical wave: the trajectory is a straight ray
        let field =
            PointSourceField::new(Vec2::new(0.0, -50.0), Sense::PlusZ, KernelKind::Kernel2DAsymptotic);
        let i_ref = field.intensity(Vec2::new(0.0, -49.0)).unwrap();
        let provider = TwoiField::new(&field, 1.0, i_ref);

        let start = Vec2::new(2.0, -40.0);
        let dir = (start - field.origin()).unit();
        let state0 = TrajectoryState::new(start, dir.scale(LIGHT_SPEED));
        let screen_z = 100.0;
        let stops = StopSet { screen_z: Some(screen_z), ..Default::default() };
        let cfg = IntegratorConfig { h_max: 20.0, ..Default::default() };
        let res = integrate(&provider, state0, &stops, &cfg, None).unwrap();
        match res.outcome {
            Outcome::ScreenHit { y, .. } => {
                // geometric ray: y = origin.y + (screen_z - origin.z) * dir.y/dir.z
                let y_geo = field.origin().y + (screen_z - field.origin().z) * dir.y / dir.z;
                assert!((y - y_geo).abs() < 1e-6, "y = {y}, geometric {y_geo}");
            }
            other => panic!("expected ScreenHit, got {other:?}"),
        }
        // attached launch stays attached
        assert!(res.attractor_residual < 1e-6);
    }

    #[test]
    fn uniform_damping_transport_closed_form() {
        // u = 0, constant F0: x(stop) - x0 = v0/F0 once the attractor
        // criterion is reached
        let f0 = 0.5;
        let provider = UniformDynamics { u: Vec2::ZERO, rate: f0 };
        let v0 = 1.0;
        let state0 = TrajectoryState::new(Vec2::ZERO, Vec2::new(v0, 0.0));
        let stops = StopSet { attractor_stop: true, ..Default::default() };
        let cfg = IntegratorConfig {
            attractor_tol: 1e-7,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_max: 5.0,
            ..Default::default()
        };
        let res = integrate(&provider, state0, &stops, &cfg, None).unwrap();
        assert_eq!(res.outcome, Outcome::AttractorReached);
        let expect = v0 / f0;
        assert!(
            (res.final_state.pos.y - expect).abs() < 1e-6,
            "x = {}, want {expect}",
            res.final_state.pos.y
        );
    }

    #[test]
    fn attractor_monotonicity_in_uniform_field() {
        // |vel - u| is non-increasing across accepted steps for constant u
        let u = Vec2::new(0.3, 0.8);
        let provider = UniformDynamics { u, rate: 1.3 };
        let state0 = TrajectoryState::new(Vec2::ZERO, Vec2::new(-0.5, 0.1));
        let stops = StopSet { attractor_stop: true, ..Default::default() };
        let cfg = IntegratorConfig::default();
        let mut mismatches = Vec::new();
        let mut cb = |s: TraceSample| mismatches.push(s.vel_mismatch);
        integrate(&provider, state0, &stops, &cfg, Some(&mut cb)).unwrap();
        assert!(mismatches.len() > 3);
        for w in mismatches.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "mismatch grew: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn budget_exhaustion_is_an_outcome() {
        let provider = UniformDynamics { u: Vec2::new(0.0, 1.0), rate: 0.0 };
        let state0 = TrajectoryState::new(Vec2::ZERO, Vec2::new(0.0, 1.0));
        let stops = StopSet { screen_z: Some(1e9), ..Default::default() };
        let cfg = IntegratorConfig { max_steps: 10, ..Default::default() };
        let res = integrate(&provider, state0, &stops, &cfg, None).unwrap();
        assert_eq!(res.outcome, Outcome::StepBudgetExhausted);
        assert_eq!(res.steps_taken, 10);
    }

    #[test]
    fn bounds_exit_is_detected() {
        let provider = UniformDynamics { u: Vec2::new(1.0, 0.0), rate: 0.0 };
        let state0 = TrajectoryState::new(Vec2::ZERO, Vec2::new(1.0, 0.0));
        let stops = StopSet {
            bounds: Some(Bounds { y: (-1.0, 5.0), z: (-1.0, 1.0) }),
            ..Default::default()
        };
        let res = integrate(&provider, state0, &stops, &IntegratorConfig::default(), None).unwrap();
        assert_eq!(res.outcome, Outcome::OutOfBounds);
        assert!(res.final_state.pos.y > 5.0);
    }

    #[test]
    fn determinism_bitwise() {
        let field =
            PointSourceField::new(Vec2::new(0.0, -50.0), Sense::PlusZ, KernelKind::Kernel2DAsymptotic);
        let i_ref = field.intensity(Vec2::new(0.0, -49.0)).unwrap();
        let provider = TwoiField::new(&field, 1.0, i_ref);
        let state0 = TrajectoryState::new(Vec2::new(1.0, -30.0), Vec2::new(0.05, 1.0));
        let stops = StopSet { screen_z: Some(40.0), ..Default::default() };
        let cfg = IntegratorConfig::default();
        let a = integrate(&provider, state0, &stops, &cfg, None).unwrap();
        let b = integrate(&provider, state0, &stops, &cfg, None).unwrap();
        assert_eq!(a, b);
    }
}
