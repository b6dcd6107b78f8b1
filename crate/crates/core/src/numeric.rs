//! Shared numerical kernels: adaptive Gauss-Legendre quadrature (open
//! rule, all nodes interior), error function, a radix-2 FFT, an adaptive
//! Dormand-Prince 5(4) stepper for complex linear systems, and Fornberg
//! finite-difference weights.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

// ---------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------

const GL_ORDER: usize = 15;

/// Legendre nodes/weights on (-1, 1) by Newton iteration on P_n; avoids
/// any tabulated constants.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(GL_ORDER))
}

fn gl_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl_rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive quadrature by panel bisection; the error estimate compares a
/// whole-panel rule against its two halves. All evaluation points are
/// interior, so integrands may be left undefined at the endpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let mid = 0.5 * (a + b);
        let left = gl_panel(f, a, mid);
        let right = gl_panel(f, mid, b);
        let err = (left + right - whole).abs();
        if err <= tol || depth >= 48 {
            return left + right;
        }
        recurse(f, a, mid, left, 0.5 * tol, depth + 1)
            + recurse(f, mid, b, right, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gl_panel(&f, a, b);
    recurse(&f, a, b, whole, tol, 0)
}

// ---------------------------------------------------------------------
// Error function / normal CDF
// ---------------------------------------------------------------------

/// erf by Maclaurin series for small arguments and the Legendre continued
/// fraction for the tail.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.5 {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        1.0 - erf(x)
    } else {
        erfc_cf(x)
    }
}

fn erf_series(x: f64) -> f64 {
    // 2/sqrt(pi) * sum (-1)^k x^(2k+1) / (k! (2k+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x2 / kf;
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    // evaluated with the modified Lentz algorithm.
    let tiny = 1e-300;
    let mut f = x.max(tiny);
    let mut c = f;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64 / 2.0;
        let b = x;
        d = b + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
}

// ---------------------------------------------------------------------
// FFT (radix 2, in place, forward kernel e^{-2 pi i jk / N})
// ---------------------------------------------------------------------

pub fn fft_inplace(a: &mut [Complex64]) {
    let n = a.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = a[i + k];
                let v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}

// ---------------------------------------------------------------------
// Dormand-Prince 5(4) adaptive stepper for complex ODE systems
// ---------------------------------------------------------------------

pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// Integrates y' = f(t, y) from t0 to t1 with adaptive Dormand-Prince 5(4);
/// returns the final state.
pub fn integrate_ode<F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: Vec<Complex64>,
    opts: &OdeOptions,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    // b5 - b4: error estimator coefficients
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];

    let dim = y0.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = span / 100.0;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); dim]; 7];
    let mut ytmp = vec![Complex64::default(); dim];
    f(t, &y, &mut k[0]);
    let mut accepted = 0;
    let mut rejected = 0;

    for _ in 0..opts.max_steps {
        if (t - t1) * dir >= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = Complex64::default();
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    let a = A[stage][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                ytmp[i] = y[i] + acc * h;
            }
            let (head, tail) = k.split_at_mut(stage + 1);
            let _ = head;
            f(t + C[stage] * h, &ytmp, &mut tail[0]);
        }
        // error norm
        let mut err = 0.0f64;
        for i in 0..dim {
            let mut e = Complex64::default();
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * E[j];
                }
            }
            let scale = opts.abs_tol + opts.rel_tol * y[i].norm().max(ytmp[i].norm());
            err = err.max((e * h).norm() / scale);
        }
        if err <= 1.0 {
            t += h;
            // 5th-order solution is the last stage state (FSAL): y_{n+1} = ytmp
            y.copy_from_slice(&ytmp);
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
            accepted += 1;
        } else {
            rejected += 1;
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h.abs() < 1e-15 * span.abs() {
            return Err(Error::Numerical(format!(
                "ODE step size underflow at t = {t}; accepted {accepted}, rejected {rejected}"
            )));
        }
    }
    Err(Error::Numerical(format!(
        "ODE step budget exhausted: {} steps, t = {t} of {t1}",
        opts.max_steps
    )))
}

// ---------------------------------------------------------------------
// Finite-difference weights (Fornberg)
// ---------------------------------------------------------------------

/// Weights approximating the m-th derivative at 0 from samples at the
/// given offsets (in grid-step units); the caller divides by h^m.
pub fn fd_weights(m: usize, offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    assert!(n > m, "need more than m+1 points for the m-th derivative");
    let mut c = vec![vec![0.0f64; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for kk in (1..=mn).rev() {
                    c[i][kk] = c1 * (kk as f64 * c[i - 1][kk - 1] - c5 * c[i - 1][kk]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for kk in (1..=mn).rev() {
                c[j][kk] = (c4 * c[j][kk] - kk as f64 * c[j][kk - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Symmetric central stencil offsets giving 4th-order accuracy for the
/// m-th derivative.
pub fn central_offsets(m: usize) -> Vec<f64> {
    let points = m + 3 + (m % 2); // odd count >= m + p - 1 with p = 4
    let r = (points - 1) / 2;
    (-(r as i64)..=r as i64).map(|i| i as f64).collect()
}
