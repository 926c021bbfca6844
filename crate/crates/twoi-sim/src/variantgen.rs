//! 1-D attractor-limit random-variant generation.
//!
//! Integrating d(xdot)/dt = -xdot F(x) until |xdot| falls below a stop
//! fraction of its initial value distributes the stopping positions
//! proportionally to F, provided the initial phase-space values are drawn
//! uniformly over a sufficient volume. Each converged trajectory also
//! satisfies the integral identity  integral_{x0}^{x_stop} F dx = xdot(0),
//! which is checked here with an independent quadrature of F.

use crate::geom::{Mat2, Vec2};
use crate::rng::stream_rng;
use crate::stats::Histogram;
use crate::twoi::{
    integrate, IntegratorConfig, Method, Outcome, RayDynamics, RayDynamicsProvider, StopSet,
    TrajectoryState,
};
use crate::twoi::Bounds;
use crate::wavefield::FieldError;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Target density family for the config surface. `F(x) >= 0` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityFn {
    /// F(x) = value.
    Constant { value: f64 },
    /// F(x) = amplitude * exp(-decay |x|) * cos^2(freq x).
    ExpCos2 { amplitude: f64, decay: f64, freq: f64 },
}

impl DensityFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DensityFn::Constant { value } => value,
            DensityFn::ExpCos2 { amplitude, decay, freq } => {
                amplitude * (-decay * x.abs()).exp() * (freq * x).cos().powi(2)
            }
        }
    }
}

/// Specification of one variant-generation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub density: DensityFn,
    pub x_init: f64,
    /// Initial speed range (v_lo, v_hi), v_lo >= 0.
    pub v_init: (f64, f64),
    /// Stop once |xdot| <= stop_fraction * |xdot(0)|.
    pub stop_fraction: f64,
    /// Positions beyond this are classified as escaped (insufficient
    /// damping left along the path).
    pub escape_x: f64,
}

impl VariantSpec {
    pub fn validate(&self) -> Result<(), String> {
        let (lo, hi) = self.v_init;
        if !(lo >= 0.0 && hi > lo) {
            return Err(format!("v_init range must satisfy 0 <= v_lo < v_hi, got ({lo}, {hi})"));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction < 1.0) {
            return Err("stop_fraction must lie in (0, 1)".into());
        }
        if self.escape_x <= self.x_init {
            return Err("escape_x must exceed x_init".into());
        }
        Ok(())
    }

    /// The Fig.-style default: F = 0.3 exp(-0.3|x|) cos^2(2x), x0 = -7,
    /// xdot(0) ~ U(0, 1.2), stop at 1e-5.
    pub fn exp_cos2_default() -> Self {
        VariantSpec {
            density: DensityFn::ExpCos2 { amplitude: 0.3, decay: 0.3, freq: 2.0 },
            x_init: -7.0,
            v_init: (0.0, 1.2),
            stop_fraction: 1e-5,
            escape_x: 40.0,
        }
    }
}

/// The 1-D system embedded on the y axis: u = 0, F = density(y).
struct VariantDynamics<'a> {
    density: &'a DensityFn,
}

impl RayDynamicsProvider for VariantDynamics<'_> {
    fn dynamics_at(&self, pos: Vec2) -> Result<RayDynamics, FieldError> {
        Ok(RayDynamics { u: Vec2::ZERO, jac: Mat2::ZERO, rate: self.density.eval(pos.y) })
    }
}

/// Why a single variant trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VariantOutcome {
    /// Reached the stop criterion at `x_stop`.
    Converged,
    /// Ran past `escape_x` with velocity to spare: F too small along the
    /// remaining path to ever stop.
    Escaped,
    /// Step budget exhausted before the stop criterion.
    NoConvergence,
}

/// One trajectory of the variant generator.
#[derive(Debug, Clone, Copy)]
pub struct VariantSample {
    pub outcome: VariantOutcome,
    pub v0: f64,
    pub x_stop: f64,
    /// | integral_{x0}^{x_stop} F dx - xdot(0) |, from an independent
    /// quadrature of F; meaningful for converged trajectories.
    pub eq5_residual: f64,
    pub steps: u64,
}

fn integrator_config() -> IntegratorConfig {
    IntegratorConfig {
        method: Method::Rkf45Adaptive,
        rel_tol: 1e-8,
        abs_tol: 1e-12,
        h_init: 0.05,
        h_min: 1e-9,
        h_max: 50.0,
        max_steps: 400_000,
        attractor_tol: 1.0, // replaced per spec below
    }
}

/// Composite Simpson quadrature of the density over [a, b], independent of
/// the ODE path.
fn integrate_density(density: &DensityFn, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // resolve the cos^2 oscillation comfortably
    let n = (((b - a) * 64.0).ceil() as usize).max(8);
    let n = n + n % 2; // even
    let h = (b - a) / n as f64;
    let mut sum = density.eval(a) + density.eval(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * density.eval(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Integrate one trajectory from (x0, v0) to the attractor limit and return
/// the stopping position together with the integral-identity residual.
pub fn sample_variant(spec: &VariantSpec, v0: f64) -> VariantSample {
    debug_assert!(spec.validate().is_ok());
    if v0 == 0.0 {
        // already at the attractor limit
        return VariantSample {
            outcome: VariantOutcome::Converged,
            v0,
            x_stop: spec.x_init,
            eq5_residual: 0.0,
            steps: 0,
        };
    }
    let provider = VariantDynamics { density: &spec.density };
    let state0 = TrajectoryState::new(Vec2::new(spec.x_init, 0.0), Vec2::new(v0, 0.0));
    let stops = StopSet {
        attractor_stop: true,
        bounds: Some(Bounds {
            y: (spec.x_init - 1.0, spec.escape_x),
            z: (-1.0, 1.0),
        }),
        ..Default::default()
    };
    let cfg = IntegratorConfig { attractor_tol: spec.stop_fraction, ..integrator_config() };
    let res = integrate(&provider, state0, &stops, &cfg, None)
        .expect("variant dynamics cannot produce non-finite states");
    let x_stop = res.final_state.pos.y;
    let outcome = match res.outcome {
        Outcome::AttractorReached => VariantOutcome::Converged,
        Outcome::OutOfBounds => VariantOutcome::Escaped,
        _ => VariantOutcome::NoConvergence,
    };
    let eq5_residual = if outcome == VariantOutcome::Converged {
        (integrate_density(&spec.density, spec.x_init, x_stop) - v0).abs()
    } else {
        f64::NAN
    };
    VariantSample { outcome, v0, x_stop, eq5_residual, steps: res.steps_taken }
}

/// Draw the initial speed for work item `index` and run it.
pub fn sample_variant_indexed(spec: &VariantSpec, seed: u64, index: u64) -> VariantSample {
    let mut rng = stream_rng(seed, index);
    let v0 = rng.gen_range(spec.v_init.0..spec.v_init.1);
    sample_variant(spec, v0)
}

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid variant spec: {0}")]
    BadSpec(String),
    #[error("{failed} of {total} trajectories failed to converge numerically (> 1%)")]
    TooManyFailures { failed: u64, total: u64 },
}

/// Ensemble result: histogram of stopping positions plus outcome counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantEnsemble {
    pub histogram: Histogram,
    pub converged: u64,
    pub escaped: u64,
    pub no_convergence: u64,
    /// Largest per-trajectory eq5 residual relative to xdot(0).
    pub max_rel_eq5_residual: f64,
}

/// Run `n` independent trajectories with per-index RNG streams and histogram
/// the stopping positions. Deterministic for fixed (seed, n), independent of
/// worker count.
///
/// Escaped trajectories (initial speed exceeding the total damping available
/// along the path) are counted and excluded from the histogram; the run
/// fails only if more than 1% of trajectories fail *numerically*.
pub fn run_variant_ensemble(
    spec: &VariantSpec,
    n: u64,
    seed: u64,
    hist_lo: f64,
    hist_hi: f64,
    bins: usize,
) -> Result<VariantEnsemble, EnsembleError> {
    spec.validate().map_err(EnsembleError::BadSpec)?;
    assert!(n >= 1);

    let samples: Vec<VariantSample> =
        (0..n).into_par_iter().map(|i| sample_variant_indexed(spec, seed, i)).collect();

    let mut histogram = Histogram::new(hist_lo, hist_hi, bins);
    let mut converged = 0;
    let mut escaped = 0;
    let mut no_convergence = 0;
    let mut max_rel = 0.0_f64;
    for s in &samples {
        match s.outcome {
            VariantOutcome::Converged => {
                converged += 1;
                histogram.add(s.x_stop);
                if s.v0 > 0.0 {
                    max_rel = max_rel.max(s.eq5_residual / s.v0);
                }
            }
            VariantOutcome::Escaped => escaped += 1,
            VariantOutcome::NoConvergence => no_convergence += 1,
        }
    }
    if no_convergence * 100 > n {
        return Err(EnsembleError::TooManyFailures { failed: no_convergence, total: n });
    }
    Ok(VariantEnsemble { histogram, converged, escaped, no_convergence, max_rel_eq5_residual: max_rel })
}

/// Density evaluated at histogram bin centers, for reference curves and the
/// total-variation comparison.
pub fn density_at_bin_centers(density: &DensityFn, hist: &Histogram) -> Vec<f64> {
    hist.bin_centers().iter().map(|&x| density.eval(x)).collect()
}
