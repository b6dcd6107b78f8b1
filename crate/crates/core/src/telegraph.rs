//! The single Goldstein-Kac telegraph process: modified Bessel functions,
//! singular endpoint weights, the absolutely continuous density and the
//! characteristic function for an arbitrary start point.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::TelegraphParams;

/// Truncation control for the Bessel series.
#[derive(Debug, Clone, Copy)]
pub struct BesselConfig {
    pub rel_tolerance: f64,
    pub max_terms: usize,
}

impl Default for BesselConfig {
    fn default() -> Self {
        BesselConfig {
            rel_tolerance: 1e-15,
            max_terms: 500,
        }
    }
}

/// Modified Bessel function I_0 by direct series summation, truncated when
/// a term drops below `rel_tolerance` times the partial sum.
pub fn bessel_i0(z: f64) -> Result<f64> {
    bessel_i0_with(z, &BesselConfig::default())
}

pub fn bessel_i0_with(z: f64, cfg: &BesselConfig) -> Result<f64> {
    debug_assert!(z >= 0.0);
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=cfg.max_terms {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term < cfg.rel_tolerance * sum {
            return Ok(sum);
        }
    }
    Err(Error::Precision {
        max_terms: cfg.max_terms,
        z,
    })
}

/// Modified Bessel function I_1 = dI_0/dz by direct series summation.
pub fn bessel_i1(z: f64) -> Result<f64> {
    bessel_i1_with(z, &BesselConfig::default())
}

pub fn bessel_i1_with(z: f64, cfg: &BesselConfig) -> Result<f64> {
    Ok(bessel_i1_over_z(z, cfg)? * z)
}

/// I_1(z)/z, finite at z = 0 (value 1/2); keeps the density formula free
/// of 0/0 at the support boundary.
pub(crate) fn bessel_i1_over_z(z: f64, cfg: &BesselConfig) -> Result<f64> {
    debug_assert!(z >= 0.0);
    let q = 0.25 * z * z;
    let mut term = 0.5;
    let mut sum = 0.5;
    for k in 1..=cfg.max_terms {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        sum += term;
        if term < cfg.rel_tolerance * sum {
            return Ok(sum);
        }
    }
    Err(Error::Precision {
        max_terms: cfg.max_terms,
        z,
    })
}

/// Mass sitting at each endpoint x0 +/- ct: exp(-lambda t)/2.
pub fn singular_weight(p: &TelegraphParams, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    0.5 * (-p.rate() * t).exp()
}

/// Density of the absolutely continuous part at (x, t); zero outside the
/// open interval (x0 - ct, x0 + ct).
pub fn density_ac(p: &TelegraphParams, x: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("density_ac requires t > 0, got {t}")));
    }
    let (lambda, c, x0) = (p.rate(), p.speed(), p.start());
    let d = (x - x0).abs();
    let ct = c * t;
    if d >= ct {
        return Ok(0.0);
    }
    let cfg = BesselConfig::default();
    // xi = (lambda/c) sqrt(c^2 t^2 - d^2); factored form avoids cancellation
    let xi = lambda / c * ((ct - d) * (ct + d)).sqrt();
    // dI0/dt = I1(xi) * lambda c t / sqrt(...) = lambda^2 t * I1(xi)/xi
    let value = (-lambda * t).exp() / (2.0 * c)
        * (lambda * bessel_i0_with(xi, &cfg)? + lambda * lambda * t * bessel_i1_over_z(xi, &cfg)?);
    Ok(value)
}

/// Damped characteristic-function factor exp(-lambda t) * [cosh/cos branch],
/// real in both branches. The factor for component k of a linear form is
/// obtained with `xi = a_k * alpha`.
///
/// Near the branch point |xi| = lambda/c the bracket is evaluated by a
/// 4-term Taylor expansion in (t Delta)^2, which crosses the
/// hyperbolic/trigonometric seam smoothly; the hyperbolic branch is summed
/// as two damped exponentials so large lambda t cannot overflow.
pub(crate) fn cf_factor_damped(lambda: f64, c: f64, xi: f64, t: f64) -> f64 {
    let cx = c * xi.abs();
    let disc = (lambda - cx) * (lambda + cx); // lambda^2 - c^2 xi^2
    let u = t * t * disc;
    if disc.abs() < 1e-9 * lambda * lambda && u.abs() < 1e-2 {
        let ch = 1.0 + u * (0.5 + u * (1.0 / 24.0 + u / 720.0));
        let shc = 1.0 + u * (1.0 / 6.0 + u * (1.0 / 120.0 + u / 5040.0));
        (-lambda * t).exp() * (ch + lambda * t * shc)
    } else if disc > 0.0 {
        let delta = disc.sqrt();
        0.5 * (1.0 + lambda / delta) * ((delta - lambda) * t).exp()
            + 0.5 * (1.0 - lambda / delta) * (-(delta + lambda) * t).exp()
    } else {
        let q = (-disc).sqrt();
        (-lambda * t).exp() * ((t * q).cos() + lambda / q * (t * q).sin())
    }
}

/// Characteristic function E exp(i alpha X(t)) of the telegraph process
/// started at x0.
pub fn char_fn(p: &TelegraphParams, alpha: f64, t: f64) -> Complex64 {
    debug_assert!(t >= 0.0);
    let phase = Complex64::new(0.0, alpha * p.start()).exp();
    phase * cf_factor_damped(p.rate(), p.speed(), alpha, t)
}
