//! Distribution of the linear form L(t) = sum_k a_k X_k(t): support,
//! singular atoms, the product characteristic function, its
//! exponential-sum representation, FFT inversion of the absolutely
//! continuous part, and the CDF.

use std::io::Write;

use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    enumerate_sign_sequences_capped, lambda_total, ModelSpec, SignSeq, DEFAULT_N_CAP,
};
use crate::numeric::fft_inplace;
use crate::telegraph::cf_factor_damped;

/// Hard cap on FFT sample count when growing the bandwidth.
const MAX_FFT_SAMPLES: usize = 1 << 20;

/// Decay threshold the AC characteristic function must reach at the edge
/// of the sampled band.
const DECAY_TARGET: f64 = 1e-6;

/// Relative threshold below which a component's exponent pair is treated
/// as confluent (repeated root), producing t-power terms.
const CONFLUENT_REL_THRESHOLD: f64 = 1e-7;

/// One merged point of the discrete component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularAtom {
    pub location: f64,
    pub mass: f64,
    pub multiplicity: usize,
    /// Lexicographic indices of the sign sequences landing on this atom.
    #[serde(skip)]
    pub members: Vec<usize>,
}

/// Closed support [center - tV, center + tV] of L(t), with
/// V = sum over positive-coefficient indices of a_k c_k minus the
/// negative-coefficient part.
pub fn support(spec: &ModelSpec, t: f64) -> (f64, f64) {
    debug_assert!(t >= 0.0);
    let center = spec.weighted_start();
    let v: f64 = (0..spec.n())
        .map(|k| spec.coef(k).abs() * spec.speed(k))
        .sum();
    (center - t * v, center + t * v)
}

/// Location of the zero-event point for the joint initial direction
/// `sigma`. The summation order here is the contract shared with the
/// Monte Carlo sampler, which reproduces these values bitwise.
pub fn singular_location(spec: &ModelSpec, t: f64, sigma: &SignSeq) -> Result<f64> {
    Ok(spec.weighted_start() + t * crate::model::sigma_speed(spec, sigma)?)
}

/// The 2^n zero-event locations at time t, with coinciding locations
/// merged; each raw point carries mass exp(-Lambda t)/2^n.
pub fn singular_atoms(spec: &ModelSpec, t: f64) -> Result<Vec<SingularAtom>> {
    if t <= 0.0 {
        return Err(Error::Domain(format!(
            "singular_atoms requires t > 0, got {t}"
        )));
    }
    let n = spec.n();
    let seqs = enumerate_sign_sequences_capped(n, DEFAULT_N_CAP)?;
    let raw_mass = (-lambda_total(spec) * t).exp() / (1u64 << n) as f64;

    // group sequence indices by location
    let groups: Vec<Vec<usize>> = if spec.exact_mode() {
        let t_exact = BigRational::from_float(t)
            .ok_or_else(|| Error::Domain(format!("non-finite t = {t}")))?;
        let offset = spec.weighted_start_exact();
        let mut map: std::collections::BTreeMap<BigRational, Vec<usize>> = Default::default();
        for (j, sigma) in seqs.iter().enumerate() {
            let q = &offset + &(&t_exact * &crate::model::sigma_speed_exact(spec, sigma)?);
            map.entry(q).or_default().push(j);
        }
        map.into_values().collect()
    } else {
        let (lo, hi) = support(spec, t);
        let tol = 1e-12 * (hi - lo);
        let mut located: Vec<(f64, usize)> = seqs
            .iter()
            .enumerate()
            .map(|(j, sigma)| Ok((singular_location(spec, t, sigma)?, j)))
            .collect::<Result<_>>()?;
        located.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut last_loc = f64::NEG_INFINITY;
        for (loc, j) in located {
            if loc - last_loc <= tol && !groups.is_empty() {
                groups.last_mut().unwrap().push(j);
            } else {
                groups.push(vec![j]);
            }
            last_loc = loc;
        }
        groups
    };

    let mut atoms: Vec<SingularAtom> = groups
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let sigma = SignSeq::from_lex_index(n, members[0]);
            let location = singular_location(spec, t, &sigma)?;
            Ok(SingularAtom {
                location,
                mass: raw_mass * members.len() as f64,
                multiplicity: members.len(),
                members,
            })
        })
        .collect::<Result<_>>()?;
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    Ok(atoms)
}

/// Characteristic function E exp(i alpha L(t)): the product formula over
/// independent components, with each damped factor evaluated as in the
/// single-process case.
pub fn char_fn_l(spec: &ModelSpec, alpha: f64, t: f64) -> Complex64 {
    debug_assert!(t >= 0.0);
    let mut factor = 1.0;
    for k in 0..spec.n() {
        factor *= cf_factor_damped(spec.rate(k), spec.speed(k), spec.coef(k) * alpha, t);
    }
    Complex64::from_polar(1.0, alpha * spec.weighted_start()) * factor
}

/// One exponential term W t^p e^{mu t} of the CF representation.
#[derive(Debug, Clone, Copy)]
pub struct ExpTerm {
    pub weight: Complex64,
    pub exponent: Complex64,
    pub t_power: u32,
}

/// The CF at a fixed frequency alpha written as
/// phase * sum_sigma W_sigma t^p e^{mu_sigma t}.
#[derive(Debug, Clone)]
pub struct ExpSumRep {
    pub phase: Complex64,
    pub terms: Vec<ExpTerm>,
}

impl ExpSumRep {
    pub fn evaluate(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::default();
        for term in &self.terms {
            acc += term.weight * t.powi(term.t_power as i32) * (term.exponent * t).exp();
        }
        self.phase * acc
    }

    /// k-th time derivative at t = 0:
    /// phase * sum over terms with p <= k of W * k!/(k-p)! * mu^(k-p).
    pub fn derivative_at_zero(&self, k: u32) -> Complex64 {
        let mut acc = Complex64::default();
        for term in &self.terms {
            if term.t_power > k {
                continue;
            }
            let mut falling = 1.0;
            for j in 0..term.t_power {
                falling *= (k - j) as f64;
            }
            acc += term.weight * falling * term.exponent.powu(k - term.t_power);
        }
        self.phase * acc
    }

    /// Sum of weights of the t^0 terms; equals 1 for a valid representation.
    pub fn weight_sum(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.t_power == 0)
            .map(|t| t.weight)
            .sum()
    }
}

/// Splits each CF factor into two exponentials (or a confluent pair when
/// the root gap Delta_k nearly vanishes) and expands the product into
/// 2^n exponential terms, merging equal exponents.
pub fn exp_sum_representation(spec: &ModelSpec, alpha: f64) -> ExpSumRep {
    let phase = Complex64::from_polar(1.0, alpha * spec.weighted_start());
    // per-component pairs of (weight, exponent, t_power)
    let mut acc: Vec<ExpTerm> = vec![ExpTerm {
        weight: Complex64::new(1.0, 0.0),
        exponent: Complex64::default(),
        t_power: 0,
    }];
    for k in 0..spec.n() {
        let lambda = spec.rate(k);
        let w = spec.speed(k) * spec.coef(k) * alpha;
        let disc = (lambda - w.abs()) * (lambda + w.abs());
        let pair: Vec<ExpTerm> = if disc.abs().sqrt() < CONFLUENT_REL_THRESHOLD * lambda {
            // confluent: factor ~ (1 + lambda t) e^{-lambda t}
            vec![
                ExpTerm {
                    weight: Complex64::new(1.0, 0.0),
                    exponent: Complex64::new(-lambda, 0.0),
                    t_power: 0,
                },
                ExpTerm {
                    weight: Complex64::new(lambda, 0.0),
                    exponent: Complex64::new(-lambda, 0.0),
                    t_power: 1,
                },
            ]
        } else {
            let delta = if disc >= 0.0 {
                Complex64::new(disc.sqrt(), 0.0)
            } else {
                Complex64::new(0.0, (-disc).sqrt())
            };
            let lam = Complex64::new(lambda, 0.0);
            vec![
                ExpTerm {
                    weight: (Complex64::new(1.0, 0.0) + lam / delta) * 0.5,
                    exponent: delta - lam,
                    t_power: 0,
                },
                ExpTerm {
                    weight: (Complex64::new(1.0, 0.0) - lam / delta) * 0.5,
                    exponent: -delta - lam,
                    t_power: 0,
                },
            ]
        };
        let mut next = Vec::with_capacity(acc.len() * pair.len());
        for base in &acc {
            for p in &pair {
                next.push(ExpTerm {
                    weight: base.weight * p.weight,
                    exponent: base.exponent + p.exponent,
                    t_power: base.t_power + p.t_power,
                });
            }
        }
        acc = next;
    }
    // merge coinciding exponents deterministically
    let scale: f64 = 1.0
        + (0..spec.n())
            .map(|k| spec.rate(k) + (spec.speed(k) * spec.coef(k) * alpha).abs())
            .sum::<f64>();
    let tol = 1e-12 * scale;
    acc.sort_by(|a, b| {
        a.t_power
            .cmp(&b.t_power)
            .then(a.exponent.re.total_cmp(&b.exponent.re))
            .then(a.exponent.im.total_cmp(&b.exponent.im))
    });
    let mut merged: Vec<ExpTerm> = Vec::with_capacity(acc.len());
    for term in acc {
        match merged.last_mut() {
            Some(last)
                if last.t_power == term.t_power
                    && (last.exponent - term.exponent).norm() <= tol =>
            {
                last.weight += term.weight;
            }
            _ => merged.push(term),
        }
    }
    ExpSumRep {
        phase,
        terms: merged,
    }
}

/// Uniform grid of AC density values at a fixed t.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionGrid {
    pub t: f64,
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub ac_mass: f64,
    /// Most negative raw inversion value before clipping; values below
    /// -1e-8 indicate the bandwidth was too small for clean pointwise
    /// reconstruction.
    #[serde(skip)]
    pub min_raw: f64,
}

impl DistributionGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_at(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn negative_clip_warning(&self) -> Option<String> {
        (self.min_raw < -1e-8).then(|| {
            format!(
                "inversion produced negative density values down to {:.3e}; they were clipped",
                self.min_raw
            )
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for j in 0..self.len() {
            writeln!(w, "{},{}", self.x_at(j), self.values[j])?;
        }
        Ok(())
    }
}

/// AC characteristic function: the product CF minus the transform of the
/// merged atoms.
pub fn char_fn_ac(spec: &ModelSpec, atoms: &[SingularAtom], alpha: f64, t: f64) -> Complex64 {
    let mut v = char_fn_l(spec, alpha, t);
    for atom in atoms {
        v -= Complex64::from_polar(atom.mass, alpha * atom.location);
    }
    v
}

/// Inverts the AC characteristic function onto a uniform grid spanning the
/// closed support padded by `half_width_factor` (>= 1). `points` is the
/// minimum grid size (a power of two, >= 256); the sample count doubles
/// until the AC characteristic function has decayed below 1e-6 at the band
/// edge, capped at 2^20 samples.
pub fn ac_density(
    spec: &ModelSpec,
    t: f64,
    half_width_factor: f64,
    points: usize,
) -> Result<DistributionGrid> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("ac_density requires t > 0, got {t}")));
    }
    if points < 256 || !points.is_power_of_two() {
        return Err(Error::Domain(format!(
            "points must be a power of two >= 256, got {points}"
        )));
    }
    if half_width_factor.is_nan() || half_width_factor < 1.0 {
        return Err(Error::Domain(format!(
            "half_width_factor must be >= 1, got {half_width_factor}"
        )));
    }
    let atoms = singular_atoms(spec, t)?;
    let (lo, hi) = support(spec, t);
    let center = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo) * half_width_factor;
    let d_alpha = std::f64::consts::PI / h;

    // grow the band until |phi_ac| decays at the edge
    let mut n = points;
    let n_final = loop {
        let alpha_max = 0.5 * n as f64 * d_alpha;
        let worst = (0..32)
            .map(|j| {
                let alpha = alpha_max * (1.0 - 0.1 * j as f64 / 32.0);
                char_fn_ac(spec, &atoms, alpha, t).norm()
            })
            .fold(0.0f64, f64::max);
        if worst < DECAY_TARGET {
            break n;
        }
        if n >= MAX_FFT_SAMPLES {
            return Err(Error::Bandwidth {
                alpha_max,
                value: worst,
            });
        }
        n *= 2;
    };

    let n = n_final;
    let dx = 2.0 * h / n as f64;
    let x0 = center - h;
    let mut samples: Vec<Complex64> = (0..n)
        .map(|m| {
            let alpha = (m as f64 - n as f64 / 2.0) * d_alpha;
            char_fn_ac(spec, &atoms, alpha, t) * Complex64::from_polar(1.0, -alpha * x0)
        })
        .collect();
    fft_inplace(&mut samples);

    // Ringing outside the closed support is pure truncation artifact; the
    // density is identically zero there, so those cells are clamped and
    // only interior negatives count toward the clip diagnostic.
    let scale = d_alpha / (2.0 * std::f64::consts::PI);
    let mut min_raw = f64::INFINITY;
    let values: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let x = x0 + j as f64 * dx;
            if x < lo - 0.5 * dx || x > hi + 0.5 * dx {
                return 0.0;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let raw = sign * v.re * scale;
            min_raw = min_raw.min(raw);
            raw.max(0.0)
        })
        .collect();
    let ac_mass = dx * values.iter().sum::<f64>();
    Ok(DistributionGrid {
        t,
        x0,
        dx,
        values,
        ac_mass,
        min_raw,
    })
}

/// The distribution function of L(t), built once from the atoms and an
/// FFT-inverted grid. The convention is F(x) = Pr{L(t) < x}
/// (left-continuous); atoms contribute only strictly below x.
#[derive(Debug, Clone)]
pub struct Cdf {
    atoms: Vec<SingularAtom>,
    grid: DistributionGrid,
    /// cumulative AC mass at cell edges, scaled so the total equals
    /// 1 - exp(-Lambda t); length = values.len() + 1
    cum: Vec<f64>,
    ac_total: f64,
    value_scale: f64,
}

impl Cdf {
    pub fn build(spec: &ModelSpec, t: f64, half_width_factor: f64, points: usize) -> Result<Cdf> {
        let grid = ac_density(spec, t, half_width_factor, points)?;
        let atoms = singular_atoms(spec, t)?;
        let ac_total = 1.0 - (-lambda_total(spec) * t).exp();
        let raw_total: f64 = grid.values.iter().sum::<f64>() * grid.dx;
        let value_scale = if raw_total > 0.0 {
            ac_total / raw_total
        } else {
            0.0
        };
        let mut cum = Vec::with_capacity(grid.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for v in &grid.values {
            acc += v * grid.dx * value_scale;
            cum.push(acc);
        }
        Ok(Cdf {
            atoms,
            grid,
            cum,
            ac_total,
            value_scale,
        })
    }

    pub fn grid(&self) -> &DistributionGrid {
        &self.grid
    }

    pub fn atoms(&self) -> &[SingularAtom] {
        &self.atoms
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx
    }

    fn ac_cum(&self, x: f64) -> f64 {
        // cell j covers [x0 + (j - 1/2) dx, x0 + (j + 1/2) dx)
        let left_edge = self.grid.x0 - 0.5 * self.grid.dx;
        let u = (x - left_edge) / self.grid.dx;
        if u <= 0.0 {
            return 0.0;
        }
        let j = u.floor() as usize;
        if j >= self.grid.len() {
            return self.ac_total;
        }
        self.cum[j] + self.grid.values[j] * self.value_scale * self.grid.dx * (u - j as f64)
    }

    /// F(x) = Pr{L(t) < x}.
    pub fn eval(&self, x: f64) -> f64 {
        let atom_mass: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location < x)
            .map(|a| a.mass)
            .sum();
        (atom_mass + self.ac_cum(x)).min(1.0)
    }

    /// Pr{L(t) <= x}: includes an atom sitting exactly at x.
    pub fn eval_le(&self, x: f64) -> f64 {
        let atom_mass: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location <= x)
            .map(|a| a.mass)
            .sum();
        (atom_mass + self.ac_cum(x)).min(1.0)
    }

    /// Conditional AC distribution function (normalized to 1).
    pub fn ac_conditional(&self, x: f64) -> f64 {
        if self.ac_total <= 0.0 {
            return 0.0;
        }
        (self.ac_cum(x) / self.ac_total).clamp(0.0, 1.0)
    }
}

/// Pr{L(t) < x} through a freshly built default grid; use [`Cdf`] directly
/// when evaluating many points.
pub fn cdf(spec: &ModelSpec, x: f64, t: f64) -> Result<f64> {
    Ok(Cdf::build(spec, t, 1.25, 4096)?.eval(x))
}

fn scaled_component_ac(spec: &ModelSpec, k: usize, y: f64, t: f64) -> Result<f64> {
    // density of a_k X_k at y
    let a = spec.coef(k);
    Ok(crate::telegraph::density_ac(spec.params(k), y / a, t)? / a.abs())
}

/// Pointwise AC density for n <= 2 by analytic convolution of the
/// component laws: atom-times-density cross terms plus an adaptive
/// quadrature of the density-density convolution. Accurate to roughly
/// 1e-12 absolute, independent of any grid, which is what high-order
/// finite differencing needs.
pub fn ac_density_conv(spec: &ModelSpec, t: f64, x: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::Domain(format!(
            "ac_density_conv requires t > 0, got {t}"
        )));
    }
    match spec.n() {
        1 => scaled_component_ac(spec, 0, x, t),
        2 => {
            let mut total = 0.0;
            // atoms of one component against the AC part of the other
            for (k, other) in [(0usize, 1usize), (1, 0)] {
                let a = spec.coef(k);
                let p = spec.params(k);
                let w = crate::telegraph::singular_weight(p, t);
                for s in [-1.0, 1.0] {
                    let q = a * (p.start() + s * p.speed() * t);
                    total += w * scaled_component_ac(spec, other, x - q, t)?;
                }
            }
            // AC (x) AC convolution over the support overlap
            let centers: Vec<f64> = (0..2).map(|k| spec.coef(k) * spec.start(k)).collect();
            let radii: Vec<f64> = (0..2)
                .map(|k| spec.coef(k).abs() * spec.speed(k) * t)
                .collect();
            let y_lo = (centers[0] - radii[0]).max(x - centers[1] - radii[1]);
            let y_hi = (centers[0] + radii[0]).min(x - centers[1] + radii[1]);
            if y_hi > y_lo {
                total += crate::numeric::integrate(
                    |y| {
                        scaled_component_ac(spec, 0, y, t).unwrap_or(0.0)
                            * scaled_component_ac(spec, 1, x - y, t).unwrap_or(0.0)
                    },
                    y_lo,
                    y_hi,
                    1e-12,
                );
            }
            Ok(total)
        }
        n => Err(Error::SizeLimit { n, cap: 2 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec_from_strs;
    use crate::numeric::integrate;
    use crate::telegraph;
    use approx::assert_relative_eq;

    fn sum_spec() -> ModelSpec {
        // two standard processes, a = (1, 1)
        spec_from_strs(&[("1", "1", "0", "1"), ("1", "1", "0", "1")])
    }

    fn generic_spec() -> ModelSpec {
        spec_from_strs(&[("1", "3", "1/2", "1"), ("2", "5", "-1", "1")])
    }

    #[test]
    fn support_examples() {
        let spec = generic_spec();
        let (lo, hi) = support(&spec, 2.0);
        // center x1 + x2 = -1/2, V = c1 + c2 = 8
        assert_relative_eq!(lo, -0.5 - 16.0, epsilon = 1e-14);
        assert_relative_eq!(hi, -0.5 + 16.0, epsilon = 1e-14);

        let (lo, hi) = support(&spec, 0.0);
        assert_eq!(lo, hi);

        // difference: same width, centered at x1 - x2
        let diff = spec_from_strs(&[("1", "3", "1/2", "1"), ("2", "5", "-1", "-1")]);
        let (lo, hi) = support(&diff, 2.0);
        assert_relative_eq!(hi - lo, 32.0, epsilon = 1e-14);
        assert_relative_eq!(0.5 * (lo + hi), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn atoms_merge_symmetric_case() {
        let spec = sum_spec();
        let atoms = singular_atoms(&spec, 1.0).unwrap();
        let m = (-2.0f64).exp();
        assert_eq!(atoms.len(), 3);
        assert_relative_eq!(atoms[0].location, -2.0, epsilon = 1e-14);
        assert_relative_eq!(atoms[1].location, 0.0, epsilon = 1e-14);
        assert_relative_eq!(atoms[2].location, 2.0, epsilon = 1e-14);
        assert_relative_eq!(atoms[0].mass, m / 4.0, epsilon = 1e-15);
        assert_relative_eq!(atoms[1].mass, m / 2.0, epsilon = 1e-15);
        assert_eq!(atoms[1].multiplicity, 2);
        assert_relative_eq!(atoms[2].mass, m / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn atoms_generic_case() {
        let spec = generic_spec();
        let t = 1.0;
        let atoms = singular_atoms(&spec, t).unwrap();
        assert_eq!(atoms.len(), 4);
        let lam = 3.0;
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        assert_relative_eq!(total, (-lam * t).exp(), epsilon = 1e-15);
        for a in &atoms {
            assert_relative_eq!(a.mass, (-lam * t).exp() / 4.0, epsilon = 1e-15);
            assert_eq!(a.multiplicity, 1);
        }
        // locations (x1+x2) +/- (c1 +/- c2) t
        let expect = [-0.5 - 8.0, -0.5 - 2.0, -0.5 + 2.0, -0.5 + 8.0];
        for (a, e) in atoms.iter().zip(expect) {
            assert_relative_eq!(a.location, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn atoms_permutation_invariance() {
        // permuting components leaves the atom multiset unchanged
        let a = spec_from_strs(&[("1", "3", "1/2", "1"), ("2", "5", "-1", "1")]);
        let b = spec_from_strs(&[("2", "5", "-1", "1"), ("1", "3", "1/2", "1")]);
        let (aa, ab) = (
            singular_atoms(&a, 0.7).unwrap(),
            singular_atoms(&b, 0.7).unwrap(),
        );
        assert_eq!(aa.len(), ab.len());
        for (x, y) in aa.iter().zip(&ab) {
            assert_relative_eq!(x.location, y.location, epsilon = 1e-12);
            assert_relative_eq!(x.mass, y.mass, epsilon = 1e-15);
        }
    }

    #[test]
    fn atoms_tolerance_merge_in_float_mode() {
        // same geometry as the symmetric case but built from floats
        let spec =
            ModelSpec::from_f64_parts(&[(1.0, 1.0, 0.0, 1.0), (1.0, 1.0, 0.0, 1.0)]).unwrap();
        let atoms = singular_atoms(&spec, 1.0).unwrap();
        assert_eq!(atoms.len(), 3);
        assert_eq!(atoms[1].multiplicity, 2);
    }

    #[test]
    fn char_fn_l_basics() {
        let spec = generic_spec();
        assert_eq!(char_fn_l(&spec, 0.0, 1.3), Complex64::new(1.0, 0.0));
        let v = char_fn_l(&spec, 0.8, 0.0);
        let expect = Complex64::from_polar(1.0, 0.8 * spec.weighted_start());
        assert!((v - expect).norm() < 1e-14);
    }

    #[test]
    fn char_fn_l_factorizes_over_components() {
        let specs = [
            generic_spec(),
            sum_spec(),
            spec_from_strs(&[
                ("1/2", "2", "1", "2"),
                ("3", "1/3", "0", "-1"),
                ("1", "1", "-2", "1/2"),
            ]),
        ];
        for spec in &specs {
            for &alpha in &[0.25, 1.0, 2.5, 7.0] {
                for &t in &[0.4, 1.0, 2.3] {
                    let product: Complex64 = (0..spec.n())
                        .map(|k| telegraph::char_fn(spec.params(k), spec.coef(k) * alpha, t))
                        .product();
                    let direct = char_fn_l(spec, alpha, t);
                    assert!(
                        (direct - product).norm() < 1e-12,
                        "alpha={alpha} t={t}: {direct} vs {product}"
                    );
                }
            }
        }
    }

    #[test]
    fn char_fn_l_modulus_and_symmetry() {
        let spec = generic_spec();
        for i in 0..40 {
            let alpha = -5.0 + 0.25 * i as f64;
            let v = char_fn_l(&spec, alpha, 0.9);
            assert!(v.norm() <= 1.0 + 1e-12);
            assert!((v.conj() - char_fn_l(&spec, -alpha, 0.9)).norm() < 1e-13);
        }
    }

    #[test]
    fn exp_sum_alpha_zero() {
        let spec = generic_spec();
        let rep = exp_sum_representation(&spec, 0.0);
        // one exponent 0 with weight 1, everything else weightless
        let mut unit = 0;
        for term in &rep.terms {
            if term.exponent.norm() < 1e-12 {
                assert!((term.weight - Complex64::new(1.0, 0.0)).norm() < 1e-12);
                unit += 1;
            } else {
                assert!(term.weight.norm() < 1e-12);
            }
        }
        assert_eq!(unit, 1);
    }

    #[test]
    fn exp_sum_matches_product_formula() {
        let spec = generic_spec();
        let mut state = 1234u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let alpha = -4.0 + 8.0 * next();
            let t = 0.1 + 2.4 * next();
            let rep = exp_sum_representation(&spec, alpha);
            let direct = char_fn_l(&spec, alpha, t);
            assert!(
                (rep.evaluate(t) - direct).norm() < 1e-10,
                "alpha={alpha} t={t}"
            );
        }
    }

    #[test]
    fn exp_sum_weights_and_exponent_bounds() {
        let spec = generic_spec();
        let two_lambda: f64 = 2.0 * lambda_total(&spec);
        for &alpha in &[0.3, 0.45, 1.8, 6.0] {
            let rep = exp_sum_representation(&spec, alpha);
            assert!((rep.weight_sum() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            for term in &rep.terms {
                assert!(term.exponent.re <= 1e-12);
                assert!(term.exponent.re >= -two_lambda - 1e-12);
            }
        }
        // inside the hyperbolic region all exponents are real-nonpositive
        let small_alpha = 0.05;
        let rep = exp_sum_representation(&spec, small_alpha);
        for term in &rep.terms {
            assert!(term.exponent.re <= 1e-12);
        }
    }

    #[test]
    fn exp_sum_confluent_branch_point() {
        // alpha exactly at a branch point of component 1: lambda/(c a)
        let spec = sum_spec();
        let alpha = 1.0;
        let rep = exp_sum_representation(&spec, alpha);
        assert!(rep.terms.iter().any(|t| t.t_power > 0));
        for &t in &[0.3, 1.0, 2.0] {
            let direct = char_fn_l(&spec, alpha, t);
            assert!((rep.evaluate(t) - direct).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn ac_density_mass_bookkeeping() {
        let spec = sum_spec();
        let grid = ac_density(&spec, 1.0, 1.25, 4096).unwrap();
        let expect = 1.0 - (-2.0f64).exp();
        assert!(
            (grid.ac_mass - expect).abs() < 1e-6,
            "mass {}",
            grid.ac_mass
        );
        assert_relative_eq!(expect, 0.8646647167633873, epsilon = 1e-12);
        assert!(grid.min_raw > -1e-6);
    }

    #[test]
    fn ac_density_symmetric_grid() {
        let spec = sum_spec();
        let grid = ac_density(&spec, 1.0, 1.25, 1024).unwrap();
        let n = grid.len();
        for j in 1..n {
            let a = grid.values[j];
            let b = grid.values[n - j];
            assert!((a - b).abs() < 1e-8, "asymmetry at {j}: {a} vs {b}");
        }
    }

    #[test]
    fn ac_density_recovers_single_process() {
        let spec = spec_from_strs(&[("1", "1", "0", "1")]);
        let grid = ac_density(&spec, 1.0, 1.25, 1024).unwrap();
        let p = spec.params(0);
        let mut checked = 0;
        for j in 0..grid.len() {
            let x = grid.x_at(j);
            if x.abs() < 0.9 {
                let expect = telegraph::density_ac(p, x, 1.0).unwrap();
                assert!(
                    (grid.values[j] - expect).abs() < 1e-5,
                    "x={x}: {} vs {expect}",
                    grid.values[j]
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn ac_density_rejects_bad_arguments() {
        let spec = sum_spec();
        assert!(ac_density(&spec, 0.0, 1.25, 1024).is_err());
        assert!(ac_density(&spec, 1.0, 1.25, 100).is_err());
        assert!(ac_density(&spec, 1.0, 1.25, 1000).is_err());
        assert!(ac_density(&spec, 1.0, 0.5, 1024).is_err());
    }

    #[test]
    fn cdf_bounds_and_monotonicity() {
        let spec = generic_spec();
        let t = 1.0;
        let cdf = Cdf::build(&spec, t, 1.25, 4096).unwrap();
        let (lo, hi) = support(&spec, t);
        assert_eq!(cdf.eval(lo - 1.0), 0.0);
        // "1 right of support" holds past the boundary cell of the grid
        assert_relative_eq!(cdf.eval(hi + cdf.dx()), 1.0, epsilon = 1e-12);

        let mut prev = -1.0;
        let mut jumps = 0.0;
        for i in 0..=1000 {
            let x = lo - 0.5 + (hi - lo + 1.0) * i as f64 / 1000.0;
            let v = cdf.eval(x);
            assert!(v >= prev - 1e-12, "non-monotone at {x}");
            prev = v;
        }
        for a in cdf.atoms() {
            jumps += cdf.eval_le(a.location) - cdf.eval(a.location);
        }
        assert_relative_eq!(jumps, (-lambda_total(&spec) * t).exp(), epsilon = 1e-12);
        // total variation of the AC part
        assert_relative_eq!(cdf.ac_conditional(hi + cdf.dx()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cdf_symmetric_center_value() {
        // symmetric spec: F(0) = Pr{L < 0} = (1 - center mass)/2
        let spec = sum_spec();
        let cdf = Cdf::build(&spec, 1.0, 1.25, 4096).unwrap();
        let center_mass = (-2.0f64).exp() / 2.0;
        assert!((cdf.eval(0.0) - 0.5 * (1.0 - center_mass)).abs() < 1e-6);
        // right endpoint approached from above the boundary cell
        assert_relative_eq!(cdf.eval(2.0 + cdf.dx()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cdf_atom_jump_convention() {
        let spec = sum_spec();
        let cdf = Cdf::build(&spec, 1.0, 1.25, 4096).unwrap();
        let m = (-2.0f64).exp();
        // strictly-below convention: the center atom is excluded at x = 0
        let below = cdf.eval(0.0);
        let at = cdf.eval_le(0.0);
        assert_relative_eq!(at - below, m / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_csv_roundtrip_shape() {
        let spec = sum_spec();
        let grid = ac_density(&spec, 1.0, 1.25, 512).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), grid.len());
        let first: Vec<f64> = rows[0].split(',').map(|v| v.parse().unwrap()).collect();
        assert_relative_eq!(first[0], grid.x0, epsilon = 1e-12);
    }

    #[test]
    fn conv_density_matches_closed_form_n1() {
        let spec = spec_from_strs(&[("1", "2", "1/2", "-2")]);
        // density of -2 X at x equals f_X(x / -2) / 2
        for &x in &[-5.0, -2.0, 0.0, 1.5, 3.0] {
            let direct = telegraph::density_ac(spec.params(0), x / -2.0, 1.0).unwrap() / 2.0;
            assert_relative_eq!(
                ac_density_conv(&spec, 1.0, x).unwrap(),
                direct,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn conv_density_matches_fft_grid_n2() {
        let spec = sum_spec();
        let grid = ac_density(&spec, 1.0, 1.25, 1024).unwrap();
        let mut checked = 0;
        for j in 0..grid.len() {
            let x = grid.x_at(j);
            if x.abs() < 1.7 && (x.abs() - 0.0).abs() > 0.1 {
                let conv = ac_density_conv(&spec, 1.0, x).unwrap();
                assert!(
                    (grid.values[j] - conv).abs() < 2e-5,
                    "x = {x}: grid {} conv {conv}",
                    grid.values[j]
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
        // mass of the convolution route by quadrature
        let mass = integrate(|x| ac_density_conv(&spec, 1.0, x).unwrap(), -2.0, 2.0, 1e-9);
        assert_relative_eq!(mass, 1.0 - (-2.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn quadrature_cross_check_of_grid_mass() {
        // independent route: integrate char-inverted density directly
        // against adaptive quadrature of the closed-form n=1 density
        let spec = spec_from_strs(&[("1", "1", "0", "1")]);
        let grid = ac_density(&spec, 1.0, 1.25, 1024).unwrap();
        let p = spec.params(0);
        let direct = integrate(
            |x| telegraph::density_ac(p, x, 1.0).unwrap(),
            -1.0,
            1.0,
            1e-9,
        );
        assert!((grid.ac_mass - direct).abs() < 2e-6);
    }
}
