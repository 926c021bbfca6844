//! Screen-crossing localization: a ring buffer of the last six accepted
//! steps and a degree-5 Lagrange interpolant solved for the plane crossing.

use crate::geom::Vec2;
use thiserror::Error;

/// Crossing solve tolerance on |z - screen_z|.
const CROSSING_TOL: f64 = 1e-9;

/// Ring-buffer capacity: six samples give the degree-5 interpolant.
pub const RECORD_CAPACITY: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum CrossingError {
    #[error("no sign change of (z - screen_z) within the last accepted step")]
    NoBracket,
    #[error("interpolation nodes are degenerate (repeated times)")]
    InterpolationDegenerate,
    #[error("need at least two samples to bracket a crossing")]
    TooFewSamples,
}

/// One accepted integration sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSample {
    pub t: f64,
    pub pos: Vec2,
    pub vel: Vec2,
}

/// Ring buffer of the last six accepted (t, pos, vel) samples, oldest first
/// when iterated. Pushes must have strictly increasing t.
#[derive(Debug, Clone)]
pub struct StepRecord {
    buf: [StepSample; RECORD_CAPACITY],
    len: usize,
    head: usize,
}

impl Default for StepRecord {
    fn default() -> Self {
        Self::new()
    }
}

impl StepRecord {
    pub fn new() -> Self {
        let zero = StepSample { t: 0.0, pos: Vec2::ZERO, vel: Vec2::ZERO };
        StepRecord { buf: [zero; RECORD_CAPACITY], len: 0, head: 0 }
    }

    pub fn push(&mut self, sample: StepSample) {
        if let Some(last) = self.last() {
            debug_assert!(sample.t > last.t, "samples must have strictly increasing t");
        }
        self.buf[self.head] = sample;
        self.head = (self.head + 1) % RECORD_CAPACITY;
        self.len = (self.len + 1).min(RECORD_CAPACITY);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn last(&self) -> Option<&StepSample> {
        if self.len == 0 {
            return None;
        }
        Some(&self.buf[(self.head + RECORD_CAPACITY - 1) % RECORD_CAPACITY])
    }

    /// Samples oldest to newest.
    pub fn samples(&self) -> Vec<StepSample> {
        let start = (self.head + RECORD_CAPACITY - self.len) % RECORD_CAPACITY;
        (0..self.len).map(|i| self.buf[(start + i) % RECORD_CAPACITY]).collect()
    }
}

/// Barycentric Lagrange interpolant over up to six nodes.
struct Lagrange {
    ts: Vec<f64>,
    ws: Vec<f64>,
}

impl Lagrange {
    fn new(ts: Vec<f64>) -> Result<Self, CrossingError> {
        let n = ts.len();
        let mut ws = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = ts[i] - ts[j];
                    if d == 0.0 {
                        return Err(CrossingError::InterpolationDegenerate);
                    }
                    ws[i] /= d;
                }
            }
        }
        Ok(Lagrange { ts, ws })
    }

    fn eval(&self, values: &[f64], t: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.ts.len() {
            let d = t - self.ts[i];
            if d == 0.0 {
                return values[i];
            }
            let c = self.ws[i] / d;
            num += c * values[i];
            den += c;
        }
        num / den
    }
}

/// Locate the time and transverse position where the trajectory crosses the
/// plane z = screen_z.
///
/// The buffer must hold samples whose final step brackets the crossing:
/// (z - screen_z) changes sign between the last two samples. Builds
/// degree-(n-1) Lagrange interpolants y(t), z(t) from the buffered samples
/// (degree 5 once the buffer is full) and solves z(t*) = screen_z with a
/// safeguarded bracketing iteration to |z - screen_z| < 1e-9.
pub fn screen_crossing(buffer: &StepRecord, screen_z: f64) -> Result<(f64, f64), CrossingError> {
    let samples = buffer.samples();
    if samples.len() < 2 {
        return Err(CrossingError::TooFewSamples);
    }
    let n = samples.len();
    let fa = samples[n - 2].pos.z - screen_z;
    let fb = samples[n - 1].pos.z - screen_z;
    if fa * fb > 0.0 {
        return Err(CrossingError::NoBracket);
    }

    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.pos.y).collect();
    let zs: Vec<f64> = samples.iter().map(|s| s.pos.z).collect();
    let interp = Lagrange::new(ts.clone())?;

    // Illinois-style safeguarded bracketing on g(t) = z(t) - screen_z.
    let mut a = ts[n - 2];
    let mut b = ts[n - 1];
    let mut ga = fa;
    let mut gb = fb;
    let mut side = 0i8;
    let mut t_star = if gb == 0.0 { b } else { a };
    for _ in 0..200 {
        if ga == 0.0 {
            t_star = a;
            break;
        }
        if gb == 0.0 {
            t_star = b;
            break;
        }
        let mut m = (a * gb - b * ga) / (gb - ga);
        if !m.is_finite() || m <= a.min(b) || m >= a.max(b) {
            m = 0.5 * (a + b);
        }
        let gm = interp.eval(&zs, m) - screen_z;
        t_star = m;
        if gm.abs() < CROSSING_TOL {
            break;
        }
        if ga * gm < 0.0 {
            b = m;
            gb = gm;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = m;
            ga = gm;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    let y_star = interp.eval(&ys, t_star);
    Ok((t_star, y_star))
}
