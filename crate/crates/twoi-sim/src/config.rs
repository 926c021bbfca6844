//! Run configuration: a sectioned key-value file (TOML) with one scenario
//! section per run kind, plus the named presets for every shipped geometry.
//! Every preset can be dumped back out as a config file and edited.

use crate::scenarios::{GhostGeometry, LaunchPolicy, SlitScenario, TraceSelector};
use crate::twoi::{IntegratorConfig, Method};
use crate::variantgen::{DensityFn, VariantSpec};
use crate::wavefield::{KernelKind, Obliquity};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset `{name}`; available: {}", preset_names().join(", "))]
    UnknownPreset { name: String },
    #[error("config file error: {0}")]
    Parse(String),
    #[error("config invariant violated: {0}")]
    Invalid(String),
    #[error("subcommand `{expected}` requires a [{expected}] scenario section, config has [{actual}]")]
    KindMismatch { expected: String, actual: String },
}

/// Common run controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads; 0 picks the environment default.
    pub workers: usize,
    pub emit_traces: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 42, workers: 0, emit_traces: false }
    }
}

/// Variant-generator run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRunConfig {
    pub density: DensityFn,
    pub x_init: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub stop_fraction: f64,
    pub escape_x: f64,
    pub n: u64,
    pub hist_lo: f64,
    pub hist_hi: f64,
    pub bins: usize,
}

impl VariantRunConfig {
    pub fn spec(&self) -> VariantSpec {
        VariantSpec {
            density: self.density.clone(),
            x_init: self.x_init,
            v_init: (self.v_lo, self.v_hi),
            stop_fraction: self.stop_fraction,
            escape_x: self.escape_x,
        }
    }
}

/// Ghost run parameters: geometry plus the streaming target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostRunConfig {
    pub geometry: GhostGeometry,
    pub coincidences: u64,
    pub pair_budget: u64,
}

/// Trace run parameters: a slit scenario plus the launch selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRunConfig {
    pub slits: SlitScenario,
    pub selector: TraceSelector,
}

/// A full resolved run: exactly one scenario section must be present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantRunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slits: Option<SlitScenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghost: Option<GhostRunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceRunConfig>,
}

impl RunConfig {
    /// Name of the populated scenario section.
    pub fn kind(&self) -> &'static str {
        if self.variant.is_some() {
            "variant"
        } else if self.slits.is_some() {
            "slits"
        } else if self.ghost.is_some() {
            "ghost"
        } else if self.trace.is_some() {
            "trace"
        } else {
            "none"
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let sections = [
            self.variant.is_some(),
            self.slits.is_some(),
            self.ghost.is_some(),
            self.trace.is_some(),
        ];
        let n = sections.iter().filter(|&&b| b).count();
        if n != 1 {
            return Err(ConfigError::Invalid(format!(
                "exactly one scenario section required, found {n}"
            )));
        }
        if let Some(v) = &self.variant {
            v.spec().validate().map_err(ConfigError::Invalid)?;
            if v.n == 0 || v.bins == 0 || v.hist_hi <= v.hist_lo {
                return Err(ConfigError::Invalid("variant histogram/n invalid".into()));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn ensemble_integrator() -> IntegratorConfig {
    IntegratorConfig {
        method: Method::Rkf45Adaptive,
        rel_tol: 1e-6,
        abs_tol: 1e-8,
        h_init: 0.05,
        h_min: 1e-9,
        h_max: 25.0,
        max_steps: 200_000,
        attractor_tol: 1e-5,
    }
}

fn trace_integrator() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-8, abs_tol: 1e-10, h_max: 5.0, ..ensemble_integrator() }
}

fn slit_scenario(centers: Vec<f64>, width: f64) -> SlitScenario {
    SlitScenario {
        slit_centers: centers,
        slit_width: width,
        source_distance: 500.0,
        screen_distance: 1000.0,
        source_y: 0.0,
        n_particles: 20_000,
        launch: LaunchPolicy::SlitUnion,
        gamma: 1.0,
        kernel: KernelKind::Kernel2DAsymptotic,
        obliquity: Obliquity::None,
        quadrature_points_per_wavelength: 16,
        hist_lo: -300.0,
        hist_hi: 300.0,
        bins: 100,
        integrator: ensemble_integrator(),
        premask_twoi: false,
    }
}

fn ghost_geometry(
    centers: Vec<f64>,
    width: f64,
    crystal_half_width: f64,
    d1_aperture: f64,
    signal_hist: (f64, f64),
    idler_hist: (f64, f64),
) -> GhostGeometry {
    GhostGeometry {
        z0: 1000.0,
        z1: 500.0,
        z2: 7000.0,
        crystal_half_width,
        mask_centers: centers,
        slit_width: width,
        d1_center: 0.0,
        d1_aperture,
        launch_half_angle: None,
        gamma: 1.0,
        kernel: KernelKind::Kernel2DAsymptotic,
        obliquity: Obliquity::None,
        // half the field density of the slit presets: the ghost runs
        // integrate two orders of magnitude more trajectories
        quadrature_points_per_wavelength: 8,
        signal_hist,
        idler_hist,
        bins: 100,
        integrator: ensemble_integrator(),
        idler_geometric: false,
    }
}

pub fn preset_names() -> Vec<&'static str> {
    vec!["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig8_ghost_single", "fig9_ghost_triple"]
}

/// Look up a named preset.
pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    match name {
        "fig1" => {
            cfg.variant = Some(VariantRunConfig {
                density: DensityFn::ExpCos2 { amplitude: 0.3, decay: 0.3, freq: 2.0 },
                x_init: -7.0,
                v_lo: 0.0,
                v_hi: 1.2,
                stop_fraction: 1e-5,
                escape_x: 40.0,
                n: 100_000,
                hist_lo: -7.0,
                hist_hi: 12.0,
                bins: 200,
            });
        }
        "fig2" => {
            // fan of launches 10 lambda past a 10-lambda slit, directions at
            // 20-degree intervals; run to the attractor limit
            let mut base = slit_scenario(vec![0.0], 10.0);
            base.screen_distance = 150.0;
            base.gamma = 10.0;
            base.integrator = trace_integrator();
            cfg.trace = Some(TraceRunConfig {
                slits: base,
                selector: TraceSelector::FanFromPoint {
                    origin: crate::geom::Vec2::new(0.0, 10.0),
                    count: 18,
                    angle_step_deg: 20.0,
                    first_angle_deg: 0.0,
                },
            });
        }
        "fig3" => cfg.slits = Some(slit_scenario(vec![0.0], 8.0)),
        "fig4" => cfg.slits = Some(slit_scenario(vec![-12.5, 12.5], 5.0)),
        "fig5" => cfg.slits = Some(slit_scenario(vec![-10.0, 0.0, 10.0], 5.0)),
        "fig6" => {
            // very-near-field traces behind three 5-lambda slits, 7-lambda
            // center separation
            let mut base = slit_scenario(vec![-7.0, 0.0, 7.0], 5.0);
            base.screen_distance = 40.0;
            base.hist_lo = -40.0;
            base.hist_hi = 40.0;
            base.integrator = trace_integrator();
            cfg.trace = Some(TraceRunConfig {
                slits: base,
                selector: TraceSelector::AttachedAcrossOpenings { count: 50 },
            });
        }
        "fig8_ghost_single" => {
            cfg.ghost = Some(GhostRunConfig {
                geometry: ghost_geometry(
                    vec![0.0],
                    15.0,
                    155.0,
                    6.0,
                    (-80.0, 80.0),
                    (-1500.0, 1500.0),
                ),
                coincidences: 5000,
                pair_budget: 40_000_000,
            });
        }
        "fig9_ghost_triple" => {
            cfg.ghost = Some(GhostRunConfig {
                geometry: ghost_geometry(
                    vec![-7.0, 0.0, 7.0],
                    5.0,
                    215.0,
                    10.0,
                    (-80.0, 80.0),
                    (-2400.0, 2400.0),
                ),
                coincidences: 5000,
                pair_budget: 40_000_000,
            });
        }
        other => return Err(ConfigError::UnknownPreset { name: other.to_string() }),
    }
    cfg.validate().expect("presets are valid");
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate_and_round_trip_through_toml() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            let text = cfg.to_toml();
            let back = RunConfig::from_toml(&text)
                .unwrap_or_else(|e| panic!("preset {name} round trip: {e}\n{text}"));
            assert_eq!(cfg, back, "preset {name}");
        }
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(matches!(preset("fig99"), Err(ConfigError::UnknownPreset { .. })));
    }

    #[test]
    fn exactly_one_section_required() {
        let mut cfg = preset("fig1").unwrap();
        cfg.slits = preset("fig3").unwrap().slits;
        assert!(cfg.validate().is_err());
        let empty = RunConfig::default();
        assert!(empty.validate().is_err());
    }
}
