//! Deterministic, seedable Monte Carlo simulator for trajectory-based slit
//! diffraction and two-photon ghost diffraction.
//!
//! Particles obey a trajectory-wave ordering interaction (TWOI): their
//! velocity relaxes toward the ray velocity of a scalar optical field at a
//! field-dependent rate, which reproduces wave intensity patterns in the
//! ensemble statistics one trajectory (or correlated pair) at a time.
//!
//! The crate is organized around the simulation pipeline:
//!
//! - [`wavefield`]: scalar fields (point sources, slit-diffracted waves)
//!   with analytic first and second derivatives, ray velocity and ordering
//!   rate.
//! - [`twoi`]: the ODE system, fixed RK4 and adaptive RKF45 integration,
//!   and screen-crossing localization.
//! - [`variantgen`]: the 1-D attractor-limit random-variant generator.
//! - [`scenarios`]: end-to-end experiments (slit diffraction ensembles,
//!   trajectory traces, coincidence-gated ghost diffraction).
//! - [`stats`]: histograms and comparison metrics.
//! - [`config`]/[`output`]: run configuration, named presets, and artifact
//!   files for the `twoi-sim` CLI.

pub mod config;
pub mod geom;
pub mod output;
pub mod rng;
pub mod scenarios;
pub mod stats;
pub mod twoi;
pub mod variantgen;
pub mod wavefield;
