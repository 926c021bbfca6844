use std::time::Instant;
use twoi_sim::config::preset;
use twoi_sim::scenarios::{run_slit_diffraction, run_ghost, CoincidenceTarget};

fn main() {
    rayon::ThreadPoolBuilder::new().num_threads(2).build_global().unwrap();

    let mut sc = preset("fig3").unwrap().slits.unwrap();
    sc.n_particles = 1000;
    let t0 = Instant::now();
    let res = run_slit_diffraction(&sc, 7).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("fig3 n=1000: {:.2}s ({:.2} ms/traj), r={:.4}, hits={}", dt, dt*1000.0/1000.0, res.pearson_r, res.counts.screen_hits);

    let g = preset("fig8_ghost_single").unwrap().ghost.unwrap();
    let t0 = Instant::now();
    let res = run_ghost(&g.geometry, CoincidenceTarget { coincidences: 30, pair_budget: 100_000 }, 7).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("fig8 pairs={} coinc={} absorbed={} missed={} errors={} in {:.2}s", res.counts.pairs_sampled, res.counts.coincidences, res.counts.absorbed, res.counts.missed_d1, res.counts.errors, dt);
    println!("  -> transmitted fraction {:.4}, P(D1|transmitted) {:.4}", 
        (res.counts.pairs_sampled - res.counts.absorbed) as f64 / res.counts.pairs_sampled as f64,
        res.counts.coincidences as f64 / (res.counts.missed_d1 + res.counts.coincidences).max(1) as f64);
    let per_transmitted = dt / (res.counts.pairs_sampled - res.counts.absorbed) as f64;
    println!("  -> {:.2} ms per transmitted signal", per_transmitted*1000.0);
    let pairs_for_5000 = 5000.0 / (res.counts.coincidences as f64 / res.counts.pairs_sampled as f64);
    println!("  -> est pairs for 5000 coinc: {:.0}, est wall: {:.0}s", pairs_for_5000, pairs_for_5000 * dt / res.counts.pairs_sampled as f64);
}
