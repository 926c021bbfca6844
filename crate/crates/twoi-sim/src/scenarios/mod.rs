//! End-to-end experiments: slit-diffraction ensembles, near-field trajectory
//! traces, and the coincidence-gated ghost-diffraction runs.

mod ghost;
mod slits;
mod traces;

pub use ghost::{
    reference_ghost_curve, run_ghost, sample_pair, AssembledGhost, CoincidenceTarget,
    GhostCounts, GhostGeometry, GhostRunResult, PairClass, PairInit, PairRecord,
};
pub use slits::{
    run_slit_diffraction, AssembledSlit, LaunchPolicy, SlitCounts, SlitRunResult, SlitScenario,
};
pub use traces::{ghost_signal_traces, trace_trajectories, trace_y_at_z, Trace, TraceSelector};

use crate::stats::StatsError;
use crate::twoi::IntegrateError;
use crate::wavefield::MaskError;
use thiserror::Error;

/// Offset past the mask plane where trajectory integration starts; the
/// pre-mask leg of a radial launch is a straight ray and is handled
/// geometrically (or by TWOI integration in validation mode).
pub const MASK_EXIT_OFFSET: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("invalid scenario parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("only {hits} of {integrated} integrated trajectories reached the screen (< 90%)")]
    LowConvergence { hits: u64, integrated: u64 },
}
