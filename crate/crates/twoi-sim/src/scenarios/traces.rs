//! Per-trajectory polyline traces with accepted-step markers.

use super::slits::AssembledSlit;
use super::{ghost::AssembledGhost, ScenarioError, MASK_EXIT_OFFSET};
use crate::geom::Vec2;
use crate::rng::stream_rng;
use crate::twoi::{
    integrate, Bounds, Outcome, RayDynamicsProvider, StopSet, TraceSample, TrajectoryState,
    TwoiField,
};
use crate::wavefield::LIGHT_SPEED;
use serde::{Deserialize, Serialize};

/// Which launch set to trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceSelector {
    /// Launches attached to the local ray velocity (vel = u exactly),
    /// evenly spread across the slit openings at the mask exit plane;
    /// traces run to the screen.
    AttachedAcrossOpenings { count: usize },
    /// A fan of unit-speed launches from one point at fixed angular
    /// intervals; traces run to the attractor limit.
    FanFromPoint { origin: Vec2, count: usize, angle_step_deg: f64, first_angle_deg: f64 },
}

/// One recorded trajectory.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Launch identifier (defined by the selector).
    pub label: f64,
    pub points: Vec<TraceSample>,
    pub outcome: Outcome,
    pub attractor_residual: f64,
}

/// Trace up to 100 trajectories of a slit scenario.
pub fn trace_trajectories(
    asm: &AssembledSlit,
    selector: &TraceSelector,
) -> Result<Vec<Trace>, ScenarioError> {
    let provider =
        TwoiField::new(&asm.field, asm.scenario.gamma, asm.field.incident_intensity_ref());
    match selector {
        TraceSelector::AttachedAcrossOpenings { count } => {
            assert!(*count <= 100, "selector picks at most 100 launch conditions");
            let openings = asm.mask.openings();
            let mut launches = Vec::new();
            let per = count / openings.len();
            let extra = count % openings.len();
            for (k, (lo, hi)) in openings.iter().enumerate() {
                let m = per + usize::from(k < extra);
                // keep a margin from the slit edges where the transmitted
                // field is strong
                let margin = 0.08 * (hi - lo);
                for j in 0..m {
                    let y = lo + margin + (hi - lo - 2.0 * margin) * (j as f64 + 0.5) / m as f64;
                    launches.push(y);
                }
            }
            launches.sort_by(|a, b| a.partial_cmp(b).unwrap());

            let stops = StopSet {
                screen_z: Some(asm.scenario.screen_distance),
                bounds: Some(Bounds {
                    y: (asm.scenario.hist_lo * 2.0 - 50.0, asm.scenario.hist_hi * 2.0 + 50.0),
                    z: (0.25 * MASK_EXIT_OFFSET, asm.scenario.screen_distance + 10.0),
                }),
                ..Default::default()
            };
            launches
                .into_iter()
                .map(|y| {
                    let pos = Vec2::new(y, MASK_EXIT_OFFSET);
                    let d = provider
                        .dynamics_at(pos)
                        .map_err(|e| ScenarioError::BadParam(format!("launch point: {e}")))?;
                    let state0 = TrajectoryState::new(pos, d.u);
                    run_trace(&provider, state0, &stops, asm, y)
                })
                .collect()
        }
        TraceSelector::FanFromPoint { origin, count, angle_step_deg, first_angle_deg } => {
            assert!(*count <= 100, "selector picks at most 100 launch conditions");
            let stops = StopSet {
                attractor_stop: true,
                bounds: Some(Bounds {
                    y: (-200.0, 200.0),
                    z: (0.25 * MASK_EXIT_OFFSET, asm.scenario.screen_distance + 200.0),
                }),
                ..Default::default()
            };
            (0..*count)
                .map(|j| {
                    let deg = first_angle_deg + *angle_step_deg * j as f64;
                    let theta = deg.to_radians();
                    let state0 = TrajectoryState::new(
                        *origin,
                        Vec2::from_angle(theta).scale(LIGHT_SPEED),
                    );
                    run_trace(&provider, state0, &stops, asm, deg)
                })
                .collect()
        }
    }
}

fn run_trace(
    provider: &TwoiField<'_>,
    state0: TrajectoryState,
    stops: &StopSet,
    asm: &AssembledSlit,
    label: f64,
) -> Result<Trace, ScenarioError> {
    let mut points = Vec::new();
    let mut cb = |s: TraceSample| points.push(s);
    let res = integrate(provider, state0, stops, &asm.scenario.integrator, Some(&mut cb))?;
    Ok(Trace { label, points, outcome: res.outcome, attractor_residual: res.attractor_residual })
}

/// Trace the first `count` slit-transmitted signal trajectories of a ghost
/// geometry in the near field past the mask (z from the mask exit to
/// `z_stop`). Used for the trajectory-crossing contrast diagnostics.
pub fn ghost_signal_traces(
    asm: &AssembledGhost,
    count: usize,
    seed: u64,
    z_stop: f64,
) -> Result<Vec<Trace>, ScenarioError> {
    assert!(count <= 100, "selector picks at most 100 launch conditions");
    let mut traces = Vec::new();
    let mut index = 0u64;
    while traces.len() < count && index < 1_000_000 {
        let mut rng = stream_rng(seed, index);
        index += 1;
        let init = super::ghost::sample_pair(&asm.geometry, &mut rng);
        let y_mask = asm.signal_mask_crossing(&init);
        if !asm.mask.transmits(y_mask) {
            continue;
        }
        let field = asm.signal_field(&init)?;
        let provider = TwoiField::new(&field, asm.geometry.gamma, field.incident_intensity_ref());
        let stops = StopSet {
            screen_z: Some(z_stop),
            bounds: Some(Bounds {
                y: (-400.0, 400.0),
                z: (0.25 * MASK_EXIT_OFFSET, asm.geometry.z1 + 10.0),
            }),
            ..Default::default()
        };
        let mut points = Vec::new();
        let mut cb = |s: TraceSample| points.push(s);
        let res = integrate(
            &provider,
            asm.signal_entry_state(&init),
            &stops,
            &asm.geometry.integrator,
            Some(&mut cb),
        )?;
        traces.push(Trace {
            label: init.source_y,
            points,
            outcome: res.outcome,
            attractor_residual: res.attractor_residual,
        });
    }
    Ok(traces)
}

/// Interpolate a trace's transverse position at a given z (traces here are
/// monotone in z); `None` when z is outside the recorded range.
pub fn trace_y_at_z(trace: &Trace, z: f64) -> Option<f64> {
    let pts = &trace.points;
    if pts.is_empty() || z < pts[0].pos.z || z > pts.last().unwrap().pos.z {
        return None;
    }
    let idx = pts.partition_point(|p| p.pos.z < z);
    if idx == 0 {
        return Some(pts[0].pos.y);
    }
    let (a, b) = (&pts[idx - 1], &pts[idx.min(pts.len() - 1)]);
    if a.pos.z == b.pos.z {
        return Some(a.pos.y);
    }
    let w = (z - a.pos.z) / (b.pos.z - a.pos.z);
    Some(a.pos.y + w * (b.pos.y - a.pos.y))
}

/// Utility used by the plane-wave trace contract test: whether a provider
/// would keep a launch perfectly straight.
#[allow(dead_code)]
fn straightness_residual(points: &[TraceSample]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let a = points.first().unwrap().pos;
    let b = points.last().unwrap().pos;
    let dir = (b - a).unit();
    points
        .iter()
        .map(|p| {
            let d = p.pos - a;
            (d.y * dir.z - d.z * dir.y).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoi::test_providers::UniformDynamics;
    use crate::twoi::IntegratorConfig;

    #[test]
    fn aligned_launch_in_uniform_field_is_straight() {
        // plane-wave-like dynamics: aligned launch gives an exactly
        // straight polyline
        let u = Vec2::new(0.6, 0.8).scale(LIGHT_SPEED);
        let provider = UniformDynamics { u, rate: 1.0 };
        let stops = StopSet { screen_z: Some(40.0), ..Default::default() };
        let cfg = IntegratorConfig { h_max: 5.0, ..Default::default() };
        let mut points = Vec::new();
        let mut cb = |s: TraceSample| points.push(s);
        let res = integrate(
            &provider,
            TrajectoryState::new(Vec2::new(0.0, 1.0), u),
            &stops,
            &cfg,
            Some(&mut cb),
        )
        .unwrap();
        assert!(matches!(res.outcome, Outcome::ScreenHit { .. }));
        assert!(straightness_residual(&points) < 1e-9);
    }

    #[test]
    fn trace_interpolation() {
        let mk = |t: f64, y: f64, z: f64| TraceSample {
            t,
            pos: Vec2::new(y, z),
            vel: Vec2::ZERO,
            vel_mismatch: 0.0,
        };
        let tr = Trace {
            label: 0.0,
            points: vec![mk(0.0, 0.0, 0.0), mk(1.0, 2.0, 10.0), mk(2.0, 6.0, 20.0)],
            outcome: Outcome::AttractorReached,
            attractor_residual: 0.0,
        };
        assert_eq!(trace_y_at_z(&tr, 5.0), Some(1.0));
        assert_eq!(trace_y_at_z(&tr, 15.0), Some(4.0));
        assert_eq!(trace_y_at_z(&tr, 25.0), None);
    }
}
