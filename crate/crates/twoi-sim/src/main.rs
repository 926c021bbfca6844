//! `twoi-sim`: run named scenario presets or config files and emit
//! histogram/trace CSVs plus JSON metrics and metadata.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;
use twoi_sim::config::{preset, ConfigError, RunConfig};
use twoi_sim::output::{
    write_curve_csv, write_histogram_csv, write_metadata, write_metrics_json, write_screen_csv,
    write_traces_csv, write_variant_csv, Metadata,
};
use twoi_sim::scenarios::{
    ghost_signal_traces, reference_ghost_curve, run_ghost, run_slit_diffraction,
    trace_trajectories, AssembledGhost, AssembledSlit, CoincidenceTarget,
};
use twoi_sim::stats::{scale_to_match, total_variation};
use twoi_sim::variantgen::{density_at_bin_centers, run_variant_ensemble};

const EXIT_CONFIG: i32 = 2;
const EXIT_RUNTIME: i32 = 1;

#[derive(Parser)]
#[command(
    name = "twoi-sim",
    version,
    about = "Deterministic trajectory Monte Carlo for slit and ghost diffraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Named preset (fig1, fig2, fig3, fig4, fig5, fig6, fig8_ghost_single,
    /// fig9_ghost_triple).
    #[arg(long)]
    preset: Option<String>,
    /// Config file (TOML); exactly one of --preset/--config is required.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = auto; env TWOI_SIM_WORKERS overrides the auto
    /// default).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "twoi-sim-out")]
    out_dir: PathBuf,
    /// Write the resolved config as TOML to this path and exit.
    #[arg(long)]
    dump_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// 1-D attractor-limit variant generation (histogram of stop positions).
    Variant1d {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory count override.
        #[arg(short = 'n', long)]
        particles: Option<u64>,
    },
    /// Slit-diffraction ensemble to the detector screen.
    Slits {
        #[command(flatten)]
        common: CommonArgs,
        /// Particle count override.
        #[arg(short = 'n', long)]
        particles: Option<u64>,
        /// Emit per-trajectory traces for a small subset.
        #[arg(long)]
        emit_traces: bool,
    },
    /// Coincidence-gated two-photon ghost diffraction.
    Ghost {
        #[command(flatten)]
        common: CommonArgs,
        /// Coincidence target override.
        #[arg(long)]
        coincidences: Option<u64>,
        /// Pair budget override.
        #[arg(long)]
        pair_budget: Option<u64>,
        /// D1 detector center override (lambda).
        #[arg(long)]
        d1_center: Option<f64>,
        /// Also emit near-field signal traces.
        #[arg(long)]
        emit_traces: bool,
    },
    /// Trajectory traces (attached near-field fans or direction fans).
    Trace {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reference intensity curve only (slit screen or ghost idler screen).
    Reference {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn fail(code: i32, err: impl std::fmt::Display) -> ! {
    // machine-readable error on stderr
    eprintln!("{}", json!({ "error": err.to_string() }));
    std::process::exit(code);
}

fn resolve_config(common: &CommonArgs, expected: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = match (&common.preset, &common.config) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        _ => {
            return Err(ConfigError::Invalid(
                "exactly one of --preset or --config is required".into(),
            ))
        }
    };
    let actual = match cfg.kind() {
        "variant" => "variant1d",
        k => k,
    };
    let compatible = matches!(
        (expected, actual),
        ("variant1d", "variant1d")
            | ("slits", "slits")
            | ("ghost", "ghost")
            | ("trace", "trace")
            | ("reference", "slits")
            | ("reference", "ghost")
    );
    if !compatible {
        return Err(ConfigError::KindMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        });
    }
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.run.workers = workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn build_pool(workers: usize) -> rayon::ThreadPool {
    let n = if workers > 0 {
        workers
    } else {
        std::env::var("TWOI_SIM_WORKERS").ok().and_then(|v| v.parse().ok()).unwrap_or(0)
    };
    let mut b = rayon::ThreadPoolBuilder::new();
    if n > 0 {
        b = b.num_threads(n);
    }
    b.build().unwrap_or_else(|e| fail(EXIT_RUNTIME, format!("thread pool: {e}")))
}

fn prepare_out_dir(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)
}

fn main() {
    let cli = Cli::parse();
    match cli.command {
        Command::Variant1d { common, particles } => {
            let mut cfg = match resolve_config(&common, "variant1d") {
                Ok(c) => c,
                Err(e) => fail(EXIT_CONFIG, e),
            };
            if let Some(n) = particles {
                cfg.variant.as_mut().unwrap().n = n;
            }
            if let Err(e) = cfg.validate() {
                fail(EXIT_CONFIG, e);
            }
            run_variant(&common, cfg);
        }
        Command::Slits { common, particles, emit_traces } => {
            let mut cfg = match resolve_config(&common, "slits") {
                Ok(c) => c,
                Err(e) => fail(EXIT_CONFIG, e),
            };
            if let Some(n) = particles {
                cfg.slits.as_mut().unwrap().n_particles = n;
            }
            cfg.run.emit_traces |= emit_traces;
            run_slits(&common, cfg);
        }
        Command::Ghost { common, coincidences, pair_budget, d1_center, emit_traces } => {
            let mut cfg = match resolve_config(&common, "ghost") {
                Ok(c) => c,
                Err(e) => fail(EXIT_CONFIG, e),
            };
            {
                let g = cfg.ghost.as_mut().unwrap();
                if let Some(c) = coincidences {
                    g.coincidences = c;
                }
                if let Some(b) = pair_budget {
                    g.pair_budget = b;
                }
                if let Some(d) = d1_center {
                    g.geometry.d1_center = d;
                }
            }
            cfg.run.emit_traces |= emit_traces;
            run_ghost_cmd(&common, cfg);
        }
        Command::Trace { common } => {
            let cfg = match resolve_config(&common, "trace") {
                Ok(c) => c,
                Err(e) => fail(EXIT_CONFIG, e),
            };
            run_trace(&common, cfg);
        }
        Command::Reference { common } => {
            let cfg = match resolve_config(&common, "reference") {
                Ok(c) => c,
                Err(e) => fail(EXIT_CONFIG, e),
            };
            run_reference(&common, cfg);
        }
    }
}

/// Handle --dump-config; returns true when the run should stop.
fn maybe_dump(common: &CommonArgs, cfg: &RunConfig) -> bool {
    if let Some(path) = &common.dump_config {
        if let Err(e) = std::fs::write(path, cfg.to_toml()) {
            fail(EXIT_RUNTIME, format!("writing {}: {e}", path.display()));
        }
        println!("wrote config to {}", path.display());
        return true;
    }
    false
}

fn start_run(common: &CommonArgs, cfg: &RunConfig) -> (Metadata, Instant) {
    if let Err(e) = prepare_out_dir(&common.out_dir) {
        fail(EXIT_RUNTIME, format!("creating {}: {e}", common.out_dir.display()));
    }
    let meta = Metadata::new(cfg, common.preset.as_deref(), cfg.run.workers);
    if let Err(e) = write_metadata(&common.out_dir, &meta) {
        fail(EXIT_RUNTIME, format!("writing metadata: {e}"));
    }
    (meta, Instant::now())
}

fn finish_run(
    common: &CommonArgs,
    mut meta: Metadata,
    started: Instant,
    counts: serde_json::Value,
    metrics: serde_json::Value,
    warnings: Vec<String>,
) {
    meta.counts = Some(counts);
    meta.metrics = Some(metrics.clone());
    meta.wall_seconds = Some(started.elapsed().as_secs_f64());
    meta.warnings = warnings;
    meta.complete = true;
    if let Err(e) = write_metrics_json(&common.out_dir, &metrics) {
        fail(EXIT_RUNTIME, format!("writing metrics: {e}"));
    }
    if let Err(e) = write_metadata(&common.out_dir, &meta) {
        fail(EXIT_RUNTIME, format!("writing metadata: {e}"));
    }
}

fn run_variant(common: &CommonArgs, cfg: RunConfig) {
    if maybe_dump(common, &cfg) {
        return;
    }
    let v = cfg.variant.clone().unwrap();
    let pool = build_pool(cfg.run.workers);
    let (meta, started) = start_run(common, &cfg);
    let ensemble = pool
        .install(|| run_variant_ensemble(&v.spec(), v.n, cfg.run.seed, v.hist_lo, v.hist_hi, v.bins))
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));

    let density = density_at_bin_centers(&v.density, &ensemble.histogram);
    let (scale, scaled_f) = scale_to_match(&ensemble.histogram, &density)
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    let tv = total_variation(&ensemble.histogram, &density)
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    write_variant_csv(&common.out_dir.join("histogram.csv"), &ensemble.histogram, &scaled_f)
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));

    let counts = json!({
        "n": v.n,
        "converged": ensemble.converged,
        "escaped": ensemble.escaped,
        "no_convergence": ensemble.no_convergence,
    });
    let metrics = json!({
        "tv_distance": tv,
        "scale": scale,
        "max_rel_eq5_residual": ensemble.max_rel_eq5_residual,
    });
    println!(
        "variant1d: n={} converged={} escaped={} tv_distance={tv:.4}",
        v.n, ensemble.converged, ensemble.escaped
    );
    finish_run(common, meta, started, counts, metrics, Vec::new());
}

fn run_slits(common: &CommonArgs, cfg: RunConfig) {
    if maybe_dump(common, &cfg) {
        return;
    }
    let sc = cfg.slits.clone().unwrap();
    let pool = build_pool(cfg.run.workers);
    let (meta, started) = start_run(common, &cfg);
    let res = pool
        .install(|| run_slit_diffraction(&sc, cfg.run.seed))
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));

    write_screen_csv(
        &common.out_dir.join("histogram.csv"),
        &res.histogram,
        &res.reference,
        &res.scaled_reference,
    )
    .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));

    if cfg.run.emit_traces {
        let asm = AssembledSlit::new(sc.clone()).unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
        let traces = trace_trajectories(
            &asm,
            &twoi_sim::scenarios::TraceSelector::AttachedAcrossOpenings { count: 20 },
        )
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
        write_traces_csv(&common.out_dir.join("traces.csv"), &traces)
            .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    }

    let counts = serde_json::to_value(res.counts).unwrap();
    let metrics = json!({
        "pearson_r": res.pearson_r,
        "scale": res.scale,
        "fringes_histogram": res.fringes_histogram,
        "fringes_reference": res.fringes_reference,
        "fringe_window": res.fringe_window,
    });
    println!(
        "slits: hits={} absorbed={} pearson_r={:.4} fringes={}/{}",
        res.counts.screen_hits,
        res.counts.absorbed,
        res.pearson_r,
        res.fringes_histogram,
        res.fringes_reference
    );
    finish_run(common, meta, started, counts, metrics, Vec::new());
}

fn run_ghost_cmd(common: &CommonArgs, cfg: RunConfig) {
    if maybe_dump(common, &cfg) {
        return;
    }
    let g = cfg.ghost.clone().unwrap();
    let pool = build_pool(cfg.run.workers);
    let (meta, started) = start_run(common, &cfg);
    let target = CoincidenceTarget { coincidences: g.coincidences, pair_budget: g.pair_budget };
    let res = pool
        .install(|| run_ghost(&g.geometry, target, cfg.run.seed))
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));

    write_screen_csv(
        &common.out_dir.join("coincidence.csv"),
        &res.coincidence,
        &res.reference,
        &res.scaled_reference,
    )
    .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    write_histogram_csv(&common.out_dir.join("signal_unconditioned.csv"), &res.signal_all)
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    write_histogram_csv(&common.out_dir.join("idler_unconditioned.csv"), &res.idler_all)
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    write_curve_csv(
        &common.out_dir.join("reference.csv"),
        &res.coincidence.bin_centers(),
        &res.reference,
    )
    .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));

    let mut warnings = Vec::new();
    if res.low_coincidence_warning {
        warnings.push(format!(
            "coincidence count {} is below 10x bin count; histogram is noisy",
            res.counts.coincidences
        ));
    }
    if cfg.run.emit_traces {
        let asm = AssembledGhost::new(g.geometry.clone()).unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
        let traces = ghost_signal_traces(&asm, 100, cfg.run.seed, 50.0)
            .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
        write_traces_csv(&common.out_dir.join("signal_traces.csv"), &traces)
            .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    }

    let counts = serde_json::to_value(res.counts).unwrap();
    let metrics = json!({
        "pearson_r": res.pearson_r,
        "scale": res.scale,
        "visibility_signal": res.visibility_signal,
        "visibility_coincidence": res.visibility_coincidence,
        "coincidence_com": res.coincidence.center_of_mass().ok(),
    });
    println!(
        "ghost: pairs={} coincidences={} pearson_r={:.4} vis_signal={:.3} vis_coinc={:.3}",
        res.counts.pairs_sampled,
        res.counts.coincidences,
        res.pearson_r,
        res.visibility_signal,
        res.visibility_coincidence
    );
    finish_run(common, meta, started, counts, metrics, warnings);
}

fn run_trace(common: &CommonArgs, cfg: RunConfig) {
    if maybe_dump(common, &cfg) {
        return;
    }
    let t = cfg.trace.clone().unwrap();
    let (meta, started) = start_run(common, &cfg);
    let asm = AssembledSlit::new(t.slits.clone()).unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    let traces = trace_trajectories(&asm, &t.selector).unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    write_traces_csv(&common.out_dir.join("traces.csv"), &traces)
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));

    let n_points: usize = traces.iter().map(|t| t.points.len()).sum();
    let max_residual =
        traces.iter().map(|t| t.attractor_residual).fold(0.0_f64, f64::max);
    let counts = json!({ "traces": traces.len(), "points": n_points });
    let metrics = json!({ "max_attractor_residual": max_residual });
    println!("trace: {} traces, {} accepted-step points", traces.len(), n_points);
    finish_run(common, meta, started, counts, metrics, Vec::new());
}

fn run_reference(common: &CommonArgs, cfg: RunConfig) {
    if maybe_dump(common, &cfg) {
        return;
    }
    let (meta, started) = start_run(common, &cfg);
    let (ys, curve): (Vec<f64>, Vec<f64>) = if let Some(sc) = cfg.slits.clone() {
        let asm = AssembledSlit::new(sc).unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
        let hist = twoi_sim::stats::Histogram::new(
            asm.scenario.hist_lo,
            asm.scenario.hist_hi,
            asm.scenario.bins,
        );
        let ys = hist.bin_centers();
        let curve = asm.reference_intensity(&ys);
        (ys, curve)
    } else {
        let g = cfg.ghost.clone().unwrap();
        let asm = AssembledGhost::new(g.geometry).unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
        let hist = twoi_sim::stats::Histogram::new(
            asm.geometry.idler_hist.0,
            asm.geometry.idler_hist.1,
            asm.geometry.bins,
        );
        let ys = hist.bin_centers();
        let curve = reference_ghost_curve(&asm, &ys).unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
        (ys, curve)
    };
    write_curve_csv(&common.out_dir.join("reference.csv"), &ys, &curve)
        .unwrap_or_else(|e| fail(EXIT_RUNTIME, e));
    let metrics = json!({ "points": ys.len() });
    println!("reference: {} points", ys.len());
    finish_run(common, meta, started, json!({}), metrics, Vec::new());
}
