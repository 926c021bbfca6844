//! Fixed-step classical RK4 and the embedded Runge-Kutta-Fehlberg 4(5) pair.

/// Fehlberg tableau.
const C: [f64; 5] = [0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const A21: f64 = 0.25;
const A3: [f64; 2] = [3.0 / 32.0, 9.0 / 32.0];
const A4: [f64; 3] = [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0];
const A5: [f64; 4] = [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0];
const A6: [f64; 5] = [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0];
/// 5th-order solution weights.
const B5: [f64; 6] = [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
/// 4th-order solution weights.
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];

fn axpy<const N: usize>(y: &[f64; N], terms: &[(&[f64; N], f64)], h: f64) -> [f64; N] {
    let mut out = *y;
    for (k, c) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One classical fourth-order Runge-Kutta step of size `h`.
pub fn rk4_step<const N: usize, E>(
    t: f64,
    y: &[f64; N],
    h: f64,
    f: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
) -> Result<[f64; N], E> {
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, &[(&k1, 0.5)], h))?;
    let k3 = f(t + 0.5 * h, &axpy(y, &[(&k2, 0.5)], h))?;
    let k4 = f(t + h, &axpy(y, &[(&k3, 1.0)], h))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Result of an embedded RKF45 attempt: the fifth-order solution and the
/// scaled error norm (<= 1 means the step satisfies the tolerances).
#[derive(Debug, Clone, Copy)]
pub struct RkfStep<const N: usize> {
    pub y: [f64; N],
    pub err_norm: f64,
}

/// One embedded Runge-Kutta-Fehlberg 4(5) attempt of size `h`.
///
/// The error estimate is the RMS of the 4th/5th-order difference scaled by
/// `abs_tol + rel_tol * max(|y_i|, |y_i'|)` per component.
pub fn rkf45_step<const N: usize, E>(
    t: f64,
    y: &[f64; N],
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
    f: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
) -> Result<RkfStep<N>, E> {
    let k1 = f(t, y)?;
    let k2 = f(t + C[0] * h, &axpy(y, &[(&k1, A21)], h))?;
    let k3 = f(t + C[1] * h, &axpy(y, &[(&k1, A3[0]), (&k2, A3[1])], h))?;
    let k4 = f(t + C[2] * h, &axpy(y, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])], h))?;
    let k5 = f(
        t + C[3] * h,
        &axpy(y, &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])], h),
    )?;
    let k6 = f(
        t + C[4] * h,
        &axpy(y, &[(&k1, A6[0]), (&k2, A6[1]), (&k3, A6[2]), (&k4, A6[3]), (&k5, A6[4])], h),
    )?;

    let ks = [&k1, &k2, &k3, &k4, &k5, &k6];
    let mut y5 = *y;
    let mut y4 = *y;
    for (j, k) in ks.iter().enumerate() {
        for i in 0..N {
            y5[i] += h * B5[j] * k[i];
            y4[i] += h * B4[j] * k[i];
        }
    }

    let mut sum_sq = 0.0;
    for i in 0..N {
        let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
        let e = (y5[i] - y4[i]) / scale;
        sum_sq += e * e;
    }
    Ok(RkfStep { y: y5, err_norm: (sum_sq / N as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    type R<const N: usize> = Result<[f64; N], Infallible>;

    #[test]
    fn zero_rhs_is_identity() {
        let mut f = |_t: f64, _y: &[f64; 3]| -> R<3> { Ok([0.0; 3]) };
        let y0 = [1.0, -2.0, 3.5];
        let y1 = rk4_step(0.0, &y0, 0.7, &mut f).unwrap();
        assert_eq!(y1, y0);
        let s = rkf45_step(0.0, &y0, 0.7, 1e-10, 1e-8, &mut f).unwrap();
        assert_eq!(s.y, y0);
        assert_eq!(s.err_norm, 0.0);
    }

    #[test]
    fn exponential_decay_closed_form() {
        // dv/dt = -F0 v with F0 = 0.5, v0 = 1: v(4) = e^{-2}
        let f0 = 0.5;
        let mut f = |_t: f64, y: &[f64; 1]| -> R<1> { Ok([-f0 * y[0]]) };
        let mut y = [1.0];
        let h: f64 = 1e-3;
        let steps = (4.0 / h).round() as usize;
        for i in 0..steps {
            y = rk4_step(i as f64 * h, &y, h, &mut f).unwrap();
        }
        let exact = (-2.0_f64).exp();
        assert!((y[0] - exact).abs() < 1e-10, "got {} want {}", y[0], exact);
    }

    #[test]
    fn rk4_and_rkf45_agree_as_cross_checks() {
        // same damping system integrated both ways agrees to 1e-9
        let f0 = 0.5;
        let mut f = |_t: f64, y: &[f64; 1]| -> R<1> { Ok([-f0 * y[0]]) };

        let mut y_rk4 = [1.0];
        let h: f64 = 1e-3;
        let steps = (4.0 / h).round() as usize;
        for i in 0..steps {
            y_rk4 = rk4_step(i as f64 * h, &y_rk4, h, &mut f).unwrap();
        }

        let mut y_rkf = [1.0];
        let mut t = 0.0;
        let mut h_ad: f64 = 1e-3;
        while t < 4.0 {
            let h_try = h_ad.min(4.0 - t);
            let s = rkf45_step(t, &y_rkf, h_try, 1e-12, 1e-10, &mut f).unwrap();
            if s.err_norm <= 1.0 {
                y_rkf = s.y;
                t += h_try;
            }
            let factor = (0.9 * s.err_norm.max(1e-12).powf(-0.2)).clamp(0.1, 5.0);
            h_ad = (h_try * factor).clamp(1e-9, 1.0);
        }
        assert!((y_rk4[0] - y_rkf[0]).abs() < 1e-9);
    }
}
