//! Single/double/triple-slit diffraction ensembles: a point source
//! illuminates a slit mask, each particle propagates as a straight ray to
//! the mask (radial launches are exact trajectories of the incident wave),
//! then follows the TWOI through the diffracted field to the screen.

use super::{ScenarioError, MASK_EXIT_OFFSET};
use crate::geom::Vec2;
use crate::rng::stream_rng;
use crate::stats::{fringe_count, pearson, scale_to_match, Histogram};
use crate::twoi::{
    integrate, Bounds, IntegratorConfig, Outcome, StopSet, TraceSample, TrajectoryResult,
    TrajectoryState, TwoiField,
};
use crate::wavefield::{
    DiffractedField, KernelKind, Obliquity, PointSourceField, ScalarField, Sense, SlitMask,
    LIGHT_SPEED,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative threshold and envelope margin for fringe counting.
const FRINGE_THRESHOLD: f64 = 0.15;
const ENVELOPE_MARGIN: f64 = 0.95;

/// Initial-condition policy for launch directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LaunchPolicy {
    /// Uniform in angle over the union of the angular intervals subtended
    /// by the slit openings; equivalent to a full cone conditioned on
    /// transmission, with no launches spent on the septa.
    SlitUnion,
    /// Uniform in angle over a cone about the source-to-mask-center
    /// direction; blocked launches are absorbed.
    Cone { half_angle: f64 },
}

/// One slit-diffraction experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitScenario {
    pub slit_centers: Vec<f64>,
    pub slit_width: f64,
    /// Source sits at z = -source_distance (mask plane is z = 0).
    pub source_distance: f64,
    /// Screen sits at z = +screen_distance.
    pub screen_distance: f64,
    pub source_y: f64,
    pub n_particles: u64,
    pub launch: LaunchPolicy,
    /// Ordering-rate gain (inverse time units).
    pub gamma: f64,
    pub kernel: KernelKind,
    pub obliquity: Obliquity,
    pub quadrature_points_per_wavelength: usize,
    pub hist_lo: f64,
    pub hist_hi: f64,
    pub bins: usize,
    pub integrator: IntegratorConfig,
    /// Validation mode: integrate the pre-mask leg with the TWOI in the
    /// incident field instead of the geometric ray.
    pub premask_twoi: bool,
}

/// Scenario with its field assembled and validated.
pub struct AssembledSlit {
    pub scenario: SlitScenario,
    pub mask: SlitMask,
    pub source: PointSourceField,
    pub field: DiffractedField,
    /// Angular intervals (lo, width) subtended by the openings, with the
    /// prefix sums of widths for sampling.
    intervals: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl AssembledSlit {
    pub fn new(scenario: SlitScenario) -> Result<Self, ScenarioError> {
        if scenario.source_distance <= 0.0 || scenario.screen_distance <= 0.0 {
            return Err(ScenarioError::BadParam("distances must be positive".into()));
        }
        if scenario.n_particles == 0 {
            return Err(ScenarioError::BadParam("n_particles must be >= 1".into()));
        }
        if !(scenario.hist_hi > scenario.hist_lo) || scenario.bins == 0 {
            return Err(ScenarioError::BadParam("invalid histogram domain".into()));
        }
        scenario.integrator.validate().map_err(ScenarioError::BadParam)?;
        let mask = SlitMask::new(scenario.slit_centers.clone(), scenario.slit_width, 0.0)?;
        let source = PointSourceField::new(
            Vec2::new(scenario.source_y, -scenario.source_distance),
            Sense::PlusZ,
            scenario.kernel,
        );
        let field = DiffractedField::new(
            source.clone(),
            mask.clone(),
            scenario.quadrature_points_per_wavelength,
            scenario.obliquity,
        )?;

        let s = source.origin();
        let mut intervals = Vec::new();
        let mut cumulative = vec![0.0];
        for (lo, hi) in mask.openings() {
            let a = ((lo - s.y) / scenario.source_distance).atan();
            let b = ((hi - s.y) / scenario.source_distance).atan();
            intervals.push((a, b - a));
            cumulative.push(cumulative.last().unwrap() + (b - a));
        }
        Ok(AssembledSlit { scenario, mask, source, field, intervals, cumulative })
    }

    /// Total angular measure of the slit openings seen from the source.
    pub fn open_angle(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Draw a launch angle (from +z) per the scenario policy.
    pub fn sample_theta(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.scenario.launch {
            LaunchPolicy::SlitUnion => {
                let xi = rng.gen_range(0.0..self.open_angle());
                for (k, (lo, w)) in self.intervals.iter().enumerate() {
                    if xi < self.cumulative[k + 1] || k == self.intervals.len() - 1 {
                        return lo + (xi - self.cumulative[k]).min(*w);
                    }
                }
                unreachable!()
            }
            LaunchPolicy::Cone { half_angle } => {
                let center_dir = ((self.mask.center_y() - self.source.origin().y)
                    / self.scenario.source_distance)
                    .atan();
                rng.gen_range(center_dir - half_angle..center_dir + half_angle)
            }
        }
    }

    /// Straight-ray transverse position at the mask plane for launch angle
    /// `theta`.
    pub fn mask_crossing(&self, theta: f64) -> f64 {
        self.source.origin().y + self.scenario.source_distance * theta.tan()
    }

    /// Entry state just past the mask for a transmitted launch.
    pub fn entry_state(&self, theta: f64) -> TrajectoryState {
        let dir = Vec2::from_angle(theta);
        let s = self.source.origin();
        let dz = MASK_EXIT_OFFSET - s.z;
        let pos = Vec2::new(s.y + dz * theta.tan(), MASK_EXIT_OFFSET);
        TrajectoryState::new(pos, dir.scale(LIGHT_SPEED))
    }

    /// Pre-mask leg by TWOI integration in the incident field (validation
    /// mode): radial launches must reproduce the geometric crossing.
    pub fn mask_crossing_twoi(&self, theta: f64) -> Result<f64, ScenarioError> {
        let dir = Vec2::from_angle(theta);
        let s = self.source.origin();
        let start = TrajectoryState::new(s + dir, dir.scale(LIGHT_SPEED));
        let i_ref = self
            .source
            .intensity(s + dir)
            .map_err(|e| ScenarioError::BadParam(format!("incident field: {e}")))?;
        let provider = TwoiField::new(&self.source, self.scenario.gamma, i_ref);
        let stops = StopSet { screen_z: Some(0.0), ..Default::default() };
        let res = integrate(&provider, start, &stops, &self.scenario.integrator, None)?;
        match res.outcome {
            Outcome::ScreenHit { y, .. } => Ok(y),
            other => Err(ScenarioError::BadParam(format!(
                "pre-mask TWOI leg did not reach the mask plane: {other:?}"
            ))),
        }
    }

    fn bounds(&self) -> Bounds {
        let span = self.scenario.hist_hi - self.scenario.hist_lo;
        Bounds {
            y: (self.scenario.hist_lo - span, self.scenario.hist_hi + span),
            z: (0.25 * MASK_EXIT_OFFSET, self.scenario.screen_distance + 10.0),
        }
    }

    /// Integrate one transmitted particle through the diffracted field with
    /// the given integrator settings.
    pub fn integrate_particle(
        &self,
        theta: f64,
        cfg: &IntegratorConfig,
        trace: Option<&mut dyn FnMut(TraceSample)>,
    ) -> Result<TrajectoryResult, ScenarioError> {
        let provider =
            TwoiField::new(&self.field, self.scenario.gamma, self.field.incident_intensity_ref());
        let stops = StopSet {
            screen_z: Some(self.scenario.screen_distance),
            bounds: Some(self.bounds()),
            ..Default::default()
        };
        Ok(integrate(&provider, self.entry_state(theta), &stops, cfg, trace)?)
    }

    /// |psi|^2 on the screen at the given transverse positions.
    pub fn reference_intensity(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter()
            .map(|&y| {
                self.field
                    .sample(Vec2::new(y, self.scenario.screen_distance))
                    .map(|s| s.intensity())
                    .unwrap_or(0.0)
            })
            .collect()
    }

    /// Central-envelope window for fringe counting: the single-slit envelope
    /// around the geometric image of the source.
    pub fn fringe_window(&self) -> (f64, f64) {
        let center = self.mask.center_y()
            - (self.source.origin().y - self.mask.center_y()) * self.scenario.screen_distance
                / self.scenario.source_distance;
        let half = ENVELOPE_MARGIN * self.scenario.screen_distance / self.scenario.slit_width;
        (center - half, center + half)
    }
}

/// Per-outcome tallies of one ensemble.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SlitCounts {
    pub launched: u64,
    pub absorbed: u64,
    pub screen_hits: u64,
    pub nodal_halts: u64,
    pub out_of_bounds: u64,
    pub budget_exhausted: u64,
}

/// Ensemble result with the reference curve and fit metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlitRunResult {
    pub histogram: Histogram,
    /// |psi|^2 sampled at bin centers.
    pub reference: Vec<f64>,
    pub scaled_reference: Vec<f64>,
    pub scale: f64,
    pub pearson_r: f64,
    pub fringe_window: (f64, f64),
    pub fringes_histogram: usize,
    pub fringes_reference: usize,
    pub counts: SlitCounts,
}

enum ParticleOutcome {
    Absorbed,
    Screen(f64),
    Other(Outcome),
}

/// Run the full ensemble: deterministic for fixed (scenario, seed),
/// independent of worker count.
pub fn run_slit_diffraction(
    scenario: &SlitScenario,
    seed: u64,
) -> Result<SlitRunResult, ScenarioError> {
    let asm = AssembledSlit::new(scenario.clone())?;
    let n = scenario.n_particles;

    let outcomes: Vec<ParticleOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let theta = asm.sample_theta(&mut rng);
            let y_mask = if asm.scenario.premask_twoi {
                asm.mask_crossing_twoi(theta)?
            } else {
                asm.mask_crossing(theta)
            };
            if !asm.mask.transmits(y_mask) {
                return Ok(ParticleOutcome::Absorbed);
            }
            let res = asm.integrate_particle(theta, &asm.scenario.integrator, None)?;
            Ok(match res.outcome {
                Outcome::ScreenHit { y, .. } => ParticleOutcome::Screen(y),
                other => ParticleOutcome::Other(other),
            })
        })
        .collect::<Result<_, ScenarioError>>()?;

    let mut histogram = Histogram::new(scenario.hist_lo, scenario.hist_hi, scenario.bins);
    let mut counts = SlitCounts { launched: n, ..Default::default() };
    for o in &outcomes {
        match o {
            ParticleOutcome::Absorbed => counts.absorbed += 1,
            ParticleOutcome::Screen(y) => {
                counts.screen_hits += 1;
                histogram.add(*y);
            }
            ParticleOutcome::Other(Outcome::NodalHalt) => counts.nodal_halts += 1,
            ParticleOutcome::Other(Outcome::OutOfBounds) => counts.out_of_bounds += 1,
            ParticleOutcome::Other(_) => counts.budget_exhausted += 1,
        }
    }

    let integrated = n - counts.absorbed;
    if integrated > 0 && counts.screen_hits * 10 < integrated * 9 {
        return Err(ScenarioError::LowConvergence { hits: counts.screen_hits, integrated });
    }

    let reference = asm.reference_intensity(&histogram.bin_centers());
    let (scale, scaled_reference) = scale_to_match(&histogram, &reference)?;
    let pearson_r = pearson(&histogram, &reference)?;
    let fringe_window = asm.fringe_window();
    let hist_values: Vec<f64> = histogram.counts().iter().map(|&c| c as f64).collect();
    let centers = histogram.bin_centers();
    let fringes_histogram =
        fringe_count(&hist_values, &centers, fringe_window, FRINGE_THRESHOLD);
    let fringes_reference = fringe_count(&reference, &centers, fringe_window, FRINGE_THRESHOLD);

    Ok(SlitRunResult {
        histogram,
        reference,
        scaled_reference,
        scale,
        pearson_r,
        fringe_window,
        fringes_histogram,
        fringes_reference,
        counts,
    })
}
