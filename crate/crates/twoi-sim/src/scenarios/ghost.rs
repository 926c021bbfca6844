//! Two-photon ghost diffraction in the unfolded geometry.
//!
//! Crystal plane at z = -Z0, slit mask at z = 0, signal screen at z = +Z1,
//! idler screen at z = -Z2. Each pair shares a source point S in the
//! crystal and launches with exactly opposite velocities; the signal
//! propagates through the mask to the signal screen, and only when it lands
//! inside the fixed detector D1 aperture is the idler trajectory run to the
//! idler screen and recorded. Every pair sees its own diffracted wave
//! because S varies across the crystal width.

use super::{ScenarioError, MASK_EXIT_OFFSET};
use crate::geom::Vec2;
use crate::rng::stream_rng;
use crate::stats::{pearson, scale_to_match, visibility, Histogram};
use crate::twoi::{
    integrate, Bounds, IntegratorConfig, Outcome, StopSet, TrajectoryState, TwoiField,
};
use crate::wavefield::{
    DiffractedField, KernelKind, Obliquity, PointSourceField, ScalarField, Sense, SlitMask,
    LIGHT_SPEED,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pairs processed per deterministic streaming round. The coincidence
/// target is checked between rounds, so the set of processed pairs depends
/// only on the accumulated counts, never on scheduling.
const PAIR_CHUNK: u64 = 8192;

/// Aperture layout and experiment distances of one ghost run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostGeometry {
    /// Crystal-to-slits distance.
    pub z0: f64,
    /// Slits-to-signal-screen distance.
    pub z1: f64,
    /// Slits-through-crystal-to-idler-screen distance (z2 > z0).
    pub z2: f64,
    /// Crystal half-width W: source points are uniform on (-W, W).
    pub crystal_half_width: f64,
    pub mask_centers: Vec<f64>,
    pub slit_width: f64,
    /// Transverse position of the fixed signal detector D1.
    pub d1_center: f64,
    /// Full aperture width of D1 (gate is inclusive at the edges).
    pub d1_aperture: f64,
    /// Signal launch cone half-angle about +z; `None` uses the smallest
    /// cone that illuminates the full mask from every source point, with a
    /// 1.2 margin.
    pub launch_half_angle: Option<f64>,
    pub gamma: f64,
    pub kernel: KernelKind,
    pub obliquity: Obliquity,
    pub quadrature_points_per_wavelength: usize,
    pub signal_hist: (f64, f64),
    pub idler_hist: (f64, f64),
    pub bins: usize,
    pub integrator: IntegratorConfig,
    /// Fast path: land the idler geometrically (radial launches in a
    /// point-source wave are exact rays). Default off: full TWOI.
    pub idler_geometric: bool,
}

impl GhostGeometry {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.z0 > 0.0 && self.z1 > 0.0 && self.z2 > self.z0) {
            return Err(ScenarioError::BadParam(
                "ghost distances must satisfy z2 > z0 > 0 and z1 > 0".into(),
            ));
        }
        if self.crystal_half_width <= 0.0 {
            return Err(ScenarioError::BadParam("crystal half-width must be positive".into()));
        }
        if self.d1_aperture <= 0.0 {
            return Err(ScenarioError::BadParam("D1 aperture must be positive".into()));
        }
        self.integrator.validate().map_err(ScenarioError::BadParam)?;
        Ok(())
    }

    /// Effective launch cone half-angle.
    pub fn launch_half_angle_value(&self, mask: &SlitMask) -> f64 {
        self.launch_half_angle.unwrap_or_else(|| {
            let (lo, hi) = mask.span();
            let half_extent = 0.5 * (hi - lo);
            1.2 * ((half_extent + self.crystal_half_width) / self.z0).atan()
        })
    }
}

/// Initial conditions of one correlated pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInit {
    /// Source point S = (source_y, -Z0) in the crystal.
    pub source_y: f64,
    /// Signal launch angle from +z.
    pub theta: f64,
}

impl PairInit {
    pub fn signal_dir(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    /// The idler launches with exactly the opposite velocity.
    pub fn idler_dir(&self) -> Vec2 {
        -self.signal_dir()
    }
}

/// How one pair resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairClass {
    /// Signal blocked at the mask.
    Absorbed,
    /// Signal reached the signal screen outside the D1 aperture.
    SignalMissedD1 { y_signal: f64 },
    /// Signal in D1 and idler recorded on the idler screen.
    Coincidence { y_signal: f64, y_idler: f64 },
    /// Any other trajectory outcome (nodal halt, bounds, budget).
    Error,
}

/// One correlated trial, for diagnostics and tests; the ensemble runner
/// aggregates these.
#[derive(Debug, Clone, Copy)]
pub struct PairRecord {
    pub init: PairInit,
    pub class: PairClass,
    /// Idler-screen landing of the free idler ray (recorded for every pair).
    pub y_idler_unconditioned: f64,
}

/// Draw one pair: source_y ~ U(-W, W), signal direction uniform in angle
/// within the launch cone about +z, idler direction its exact negative.
pub fn sample_pair(geom: &GhostGeometry, rng: &mut ChaCha8Rng) -> PairInit {
    let w = geom.crystal_half_width;
    let source_y = rng.gen_range(-w..w);
    let mask = SlitMask::new(geom.mask_centers.clone(), geom.slit_width, 0.0)
        .expect("geometry validated before sampling");
    let half = geom.launch_half_angle_value(&mask);
    let theta = rng.gen_range(-half..half);
    PairInit { source_y, theta }
}

/// Geometry with validated mask, ready to process pairs.
pub struct AssembledGhost {
    pub geometry: GhostGeometry,
    pub mask: SlitMask,
    launch_half_angle: f64,
}

impl AssembledGhost {
    pub fn new(geometry: GhostGeometry) -> Result<Self, ScenarioError> {
        geometry.validate()?;
        let mask = SlitMask::new(geometry.mask_centers.clone(), geometry.slit_width, 0.0)?;
        let launch_half_angle = geometry.launch_half_angle_value(&mask);
        Ok(AssembledGhost { geometry, mask, launch_half_angle })
    }

    pub fn launch_half_angle(&self) -> f64 {
        self.launch_half_angle
    }

    fn sample_pair_inner(&self, rng: &mut ChaCha8Rng) -> PairInit {
        let w = self.geometry.crystal_half_width;
        let source_y = rng.gen_range(-w..w);
        let theta = rng.gen_range(-self.launch_half_angle..self.launch_half_angle);
        PairInit { source_y, theta }
    }

    pub fn crystal_point(&self, init: &PairInit) -> Vec2 {
        Vec2::new(init.source_y, -self.geometry.z0)
    }

    /// Straight-ray signal crossing of the mask plane.
    pub fn signal_mask_crossing(&self, init: &PairInit) -> f64 {
        init.source_y + self.geometry.z0 * init.theta.tan()
    }

    /// Idler landing on the idler screen for the free (unblocked) idler
    /// path: a radial ray from S to z = -Z2.
    pub fn idler_geo_landing(&self, init: &PairInit) -> f64 {
        init.source_y - (self.geometry.z2 - self.geometry.z0) * init.theta.tan()
    }

    /// Per-pair e-ray diffracted field (source at this pair's S).
    pub fn signal_field(&self, init: &PairInit) -> Result<DiffractedField, ScenarioError> {
        let source =
            PointSourceField::new(self.crystal_point(init), Sense::PlusZ, self.geometry.kernel);
        Ok(DiffractedField::new(
            source,
            self.mask.clone(),
            self.geometry.quadrature_points_per_wavelength,
            self.geometry.obliquity,
        )?)
    }

    /// Signal state just past the mask.
    pub fn signal_entry_state(&self, init: &PairInit) -> TrajectoryState {
        let s = self.crystal_point(init);
        let dz = MASK_EXIT_OFFSET + self.geometry.z0;
        let pos = Vec2::new(s.y + dz * init.theta.tan(), MASK_EXIT_OFFSET);
        TrajectoryState::new(pos, init.signal_dir().scale(LIGHT_SPEED))
    }

    fn signal_bounds(&self) -> Bounds {
        let span = self.geometry.signal_hist.1 - self.geometry.signal_hist.0;
        let reach = self.geometry.crystal_half_width
            + self.geometry.z1 * self.launch_half_angle.tan().abs()
            + span;
        Bounds {
            y: (-4.0 * reach - 50.0, 4.0 * reach + 50.0),
            z: (0.25 * MASK_EXIT_OFFSET, self.geometry.z1 + 10.0),
        }
    }

    /// Integrate the signal trajectory to the signal screen.
    pub fn integrate_signal(&self, init: &PairInit) -> Result<Outcome, ScenarioError> {
        let field = self.signal_field(init)?;
        let provider = TwoiField::new(&field, self.geometry.gamma, field.incident_intensity_ref());
        let stops = StopSet {
            screen_z: Some(self.geometry.z1),
            bounds: Some(self.signal_bounds()),
            ..Default::default()
        };
        let res = integrate(
            &provider,
            self.signal_entry_state(init),
            &stops,
            &self.geometry.integrator,
            None,
        )?;
        Ok(res.outcome)
    }

    /// Integrate the idler trajectory in the o-ray point-source field to the
    /// idler screen; radial launches are exact rays, so this must agree
    /// with `idler_geo_landing` to high accuracy.
    pub fn integrate_idler(&self, init: &PairInit) -> Result<Outcome, ScenarioError> {
        let s = self.crystal_point(init);
        let o_ray = PointSourceField::new(s, Sense::MinusZ, self.geometry.kernel);
        let dir = init.idler_dir();
        let start = TrajectoryState::new(s + dir, dir.scale(LIGHT_SPEED));
        let i_ref = o_ray
            .intensity(start.pos)
            .map_err(|e| ScenarioError::BadParam(format!("idler field: {e}")))?;
        let provider = TwoiField::new(&o_ray, self.geometry.gamma, i_ref);
        let reach = self.geometry.crystal_half_width
            + (self.geometry.z2 - self.geometry.z0) * self.launch_half_angle.tan().abs();
        let stops = StopSet {
            screen_z: Some(-self.geometry.z2),
            bounds: Some(Bounds {
                y: (-2.0 * reach - 50.0, 2.0 * reach + 50.0),
                z: (-self.geometry.z2 - 10.0, -self.geometry.z0 + 2.0),
            }),
            ..Default::default()
        };
        // the idler leg is long and smooth; let the controller stride
        let cfg = IntegratorConfig { h_max: 100.0, ..self.geometry.integrator };
        let res = integrate(&provider, start, &stops, &cfg, None)?;
        Ok(res.outcome)
    }

    /// Process one pair start to finish.
    pub fn process_pair(&self, init: &PairInit) -> Result<PairRecord, ScenarioError> {
        let y_idler_unconditioned = self.idler_geo_landing(init);
        let record = |class| PairRecord { init: *init, class, y_idler_unconditioned };

        let y_mask = self.signal_mask_crossing(init);
        if !self.mask.transmits(y_mask) {
            return Ok(record(PairClass::Absorbed));
        }
        let y_signal = match self.integrate_signal(init)? {
            Outcome::ScreenHit { y, .. } => y,
            _ => return Ok(record(PairClass::Error)),
        };
        if (y_signal - self.geometry.d1_center).abs() > 0.5 * self.geometry.d1_aperture {
            return Ok(record(PairClass::SignalMissedD1 { y_signal }));
        }
        // coincidence: run the idler
        let y_idler = if self.geometry.idler_geometric {
            y_idler_unconditioned
        } else {
            match self.integrate_idler(init)? {
                Outcome::ScreenHit { y, .. } => y,
                _ => return Ok(record(PairClass::Error)),
            }
        };
        Ok(record(PairClass::Coincidence { y_signal, y_idler }))
    }
}

/// Stop streaming pairs once this many coincidences have accumulated, or
/// at the pair budget, whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceTarget {
    pub coincidences: u64,
    pub pair_budget: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GhostCounts {
    pub pairs_sampled: u64,
    pub absorbed: u64,
    pub missed_d1: u64,
    pub coincidences: u64,
    pub errors: u64,
}

/// Full ghost-run artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhostRunResult {
    /// Coincidence-gated idler-screen histogram: the ghost pattern.
    pub coincidence: Histogram,
    /// Unconditioned signal-screen histogram (the smear control).
    pub signal_all: Histogram,
    /// Unconditioned idler-screen histogram (free idler rays, every pair).
    pub idler_all: Histogram,
    /// Reference curve at coincidence bin centers.
    pub reference: Vec<f64>,
    pub scaled_reference: Vec<f64>,
    pub scale: f64,
    pub pearson_r: f64,
    pub visibility_signal: f64,
    pub visibility_coincidence: f64,
    pub counts: GhostCounts,
    /// Set when the coincidence count is below 10x the bin count.
    pub low_coincidence_warning: bool,
}

/// Diffraction intensity on the idler screen computed as if a point source
/// sat at the signal detector D1: source at (d1_center, +Z1) propagating in
/// -z through the mask to the plane Z2 beyond the slits.
pub fn reference_ghost_curve(
    asm: &AssembledGhost,
    ys: &[f64],
) -> Result<Vec<f64>, ScenarioError> {
    let g = &asm.geometry;
    let source = PointSourceField::new(
        Vec2::new(g.d1_center, g.z1),
        Sense::MinusZ,
        g.kernel,
    );
    let field = DiffractedField::new(
        source,
        asm.mask.clone(),
        g.quadrature_points_per_wavelength,
        g.obliquity,
    )?;
    Ok(ys
        .iter()
        .map(|&y| field.sample(Vec2::new(y, -g.z2)).map(|s| s.intensity()).unwrap_or(0.0))
        .collect())
}

/// Stream correlated pairs until the coincidence target (or budget) and
/// accumulate the gated and unconditioned histograms. Deterministic for
/// fixed (geometry, seed): pairs are processed in fixed-size rounds, so the
/// processed set is independent of worker count and scheduling.
pub fn run_ghost(
    geometry: &GhostGeometry,
    target: CoincidenceTarget,
    seed: u64,
) -> Result<GhostRunResult, ScenarioError> {
    assert!(target.pair_budget >= 1);
    let asm = AssembledGhost::new(geometry.clone())?;
    let g = &asm.geometry;

    let mut coincidence = Histogram::new(g.idler_hist.0, g.idler_hist.1, g.bins);
    let mut signal_all = Histogram::new(g.signal_hist.0, g.signal_hist.1, g.bins);
    let mut idler_all = Histogram::new(g.idler_hist.0, g.idler_hist.1, g.bins);
    let mut counts = GhostCounts::default();

    let mut next = 0u64;
    while next < target.pair_budget && counts.coincidences < target.coincidences {
        let end = (next + PAIR_CHUNK).min(target.pair_budget);
        let records: Vec<PairRecord> = (next..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                let init = asm.sample_pair_inner(&mut rng);
                asm.process_pair(&init)
            })
            .collect::<Result<_, ScenarioError>>()?;
        for r in &records {
            counts.pairs_sampled += 1;
            idler_all.add(r.y_idler_unconditioned);
            match r.class {
                PairClass::Absorbed => counts.absorbed += 1,
                PairClass::SignalMissedD1 { y_signal } => {
                    counts.missed_d1 += 1;
                    signal_all.add(y_signal);
                }
                PairClass::Coincidence { y_signal, y_idler } => {
                    counts.coincidences += 1;
                    signal_all.add(y_signal);
                    coincidence.add(y_idler);
                }
                PairClass::Error => counts.errors += 1,
            }
        }
        next = end;
    }

    // pair conservation, exactly
    assert_eq!(
        counts.pairs_sampled,
        counts.absorbed + counts.missed_d1 + counts.coincidences + counts.errors
    );

    let reference = reference_ghost_curve(&asm, &coincidence.bin_centers())?;
    let (scale, scaled_reference) = scale_to_match(&coincidence, &reference)?;
    let pearson_r = pearson(&coincidence, &reference)?;
    let visibility_signal = visibility(&signal_all, None)?;
    let visibility_coincidence = visibility(&coincidence, None)?;
    let low_coincidence_warning = counts.coincidences < 10 * g.bins as u64;

    Ok(GhostRunResult {
        coincidence,
        signal_all,
        idler_all,
        reference,
        scaled_reference,
        scale,
        pearson_r,
        visibility_signal,
        visibility_coincidence,
        counts,
        low_coincidence_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_uniform;

    pub(crate) fn fig8_geometry() -> GhostGeometry {
        GhostGeometry {
            z0: 1000.0,
            z1: 500.0,
            z2: 7000.0,
            crystal_half_width: 155.0,
            mask_centers: vec![0.0],
            slit_width: 15.0,
            d1_center: 0.0,
            d1_aperture: 6.0,
            launch_half_angle: None,
            gamma: 1.0,
            kernel: KernelKind::Kernel2DAsymptotic,
            obliquity: Obliquity::None,
            quadrature_points_per_wavelength: 8,
            signal_hist: (-80.0, 80.0),
            idler_hist: (-1500.0, 1500.0),
            bins: 100,
            integrator: IntegratorConfig {
                rel_tol: 1e-6,
                abs_tol: 1e-8,
                h_max: 25.0,
                max_steps: 200_000,
                ..Default::default()
            },
            idler_geometric: false,
        }
    }

    #[test]
    fn pair_init_directions_are_exactly_opposite() {
        let geom = fig8_geometry();
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            let p = sample_pair(&geom, &mut rng);
            let sum = p.signal_dir() + p.idler_dir();
            assert_eq!(sum, Vec2::ZERO);
            assert!(p.source_y.abs() < geom.crystal_half_width);
        }
    }

    #[test]
    fn source_positions_are_uniform() {
        let geom = fig8_geometry();
        let w = geom.crystal_half_width;
        let n = 20_000;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = stream_rng(9, i);
                sample_pair(&geom, &mut rng).source_y
            })
            .collect();
        // 1% critical value for the two-sided KS test
        let crit = 1.628 / (n as f64).sqrt();
        let d = ks_uniform(&samples, -w, w);
        assert!(d < crit, "KS D = {d}, critical {crit}");
    }

    #[test]
    fn idler_paths_geometric_vs_twoi() {
        let geom = fig8_geometry();
        let asm = AssembledGhost::new(geom).unwrap();
        for &(sy, th) in &[(10.0, 0.01), (-120.0, 0.12), (47.0, -0.08)] {
            let init = PairInit { source_y: sy, theta: th };
            let geo = asm.idler_geo_landing(&init);
            match asm.integrate_idler(&init).unwrap() {
                Outcome::ScreenHit { y, .. } => {
                    assert!((y - geo).abs() < 1e-6, "idler {y} vs geometric {geo}");
                }
                other => panic!("idler did not reach screen: {other:?}"),
            }
        }
    }

    #[test]
    fn boundary_landing_is_a_coincidence() {
        // signal landing exactly at the aperture edge gates inclusively
        let geom = fig8_geometry();
        let half_ap = 0.5 * geom.d1_aperture;
        let d1 = geom.d1_center;
        let y_edge = d1 + half_ap;
        assert!((y_edge - d1).abs() <= half_ap);
    }

    #[test]
    fn tiny_run_conserves_pairs_and_is_deterministic() {
        let geom = fig8_geometry();
        let target = CoincidenceTarget { coincidences: 2, pair_budget: 3000 };
        let a = run_ghost(&geom, target, 123).unwrap();
        let c = &a.counts;
        assert_eq!(
            c.pairs_sampled,
            c.absorbed + c.missed_d1 + c.coincidences + c.errors
        );
        assert_eq!(c.pairs_sampled, a.idler_all.samples_added());

        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_ghost(&geom, target, 123).unwrap());
        assert_eq!(a.coincidence, b.coincidence);
        assert_eq!(a.signal_all, b.signal_all);
        assert_eq!(a.idler_all, b.idler_all);
        assert_eq!(a.counts, b.counts);
    }

    #[test]
    fn reference_curve_symmetric_and_peaked_on_axis() {
        let geom = fig8_geometry();
        let asm = AssembledGhost::new(geom).unwrap();
        let ys: Vec<f64> = (-30..=30).map(|i| i as f64 * 50.0).collect();
        let curve = reference_ghost_curve(&asm, &ys).unwrap();
        let n = ys.len();
        let mid = n / 2;
        for i in 0..n {
            // symmetric mask, d1 on axis: curve even in y
            let j = n - 1 - i;
            let rel = (curve[i] - curve[j]).abs() / curve[mid];
            assert!(rel < 1e-9, "asymmetry {rel} at {i}");
        }
        // global maximum at y = 0
        let max = curve.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(curve[mid], max);
    }
}
