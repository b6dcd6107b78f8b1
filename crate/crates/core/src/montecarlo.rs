//! Exact-event simulation of telegraph paths and the linear form, with
//! empirical atoms, characteristic functions, KS statistics and the Kac
//! scaling experiment. Sampling is chunked: one RNG stream per fixed-size
//! chunk keyed by (seed, chunk index), so results are bitwise identical
//! for any worker count.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linear_form::{singular_location, SingularAtom};
use crate::model::{ModelSpec, SignSeq, TelegraphParams};
use crate::numeric::normal_cdf;

const CHUNK: usize = 8192;

/// Draws of L(t) together with the observables that make the
/// singular/absolutely-continuous split exact: total event counts and
/// initial joint directions.
#[derive(Debug, Clone)]
pub struct SampleSet {
    t: f64,
    n: usize,
    values: Vec<f64>,
    event_counts: Vec<u32>,
    sign_indices: Vec<u32>,
    seed: u64,
}

impl SampleSet {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn event_counts(&self) -> &[u32] {
        &self.event_counts
    }

    pub fn sign_index(&self, i: usize) -> u32 {
        self.sign_indices[i]
    }

    pub fn initial_signs(&self, i: usize) -> SignSeq {
        SignSeq::from_lex_index(self.n, self.sign_indices[i] as usize)
    }

    /// CSV rows `value,event_count`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (v, e) in self.values.iter().zip(&self.event_counts) {
            writeln!(w, "{v},{e}")?;
        }
        Ok(())
    }

    /// Compact little-endian dump: u64 count, f64 t, then per record
    /// f64 value + u32 events.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        for (v, e) in self.values.iter().zip(&self.event_counts) {
            w.write_all(&v.to_le_bytes())?;
            w.write_all(&e.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`write_binary`]; signs and seed are not
    /// part of the wire layout.
    pub fn read_binary<R: Read>(mut r: R) -> Result<(f64, Vec<f64>, Vec<u32>)> {
        let mut u8buf = [0u8; 8];
        r.read_exact(&mut u8buf)?;
        let count = u64::from_le_bytes(u8buf) as usize;
        r.read_exact(&mut u8buf)?;
        let t = f64::from_le_bytes(u8buf);
        let mut values = Vec::with_capacity(count);
        let mut events = Vec::with_capacity(count);
        let mut u4buf = [0u8; 4];
        for _ in 0..count {
            r.read_exact(&mut u8buf)?;
            values.push(f64::from_le_bytes(u8buf));
            r.read_exact(&mut u4buf)?;
            events.push(u32::from_le_bytes(u4buf));
        }
        Ok((t, values, events))
    }
}

/// One telegraph path endpoint: uniform initial direction, unit-rate
/// exponential spacings scaled by 1/lambda, alternating drift.
pub fn sample_position<R: Rng>(p: &TelegraphParams, t: f64, rng: &mut R) -> (f64, u32, i8) {
    debug_assert!(t > 0.0);
    let (lambda, c, x0) = (p.rate(), p.speed(), p.start());
    let sign: i8 = if rng.random::<bool>() { 1 } else { -1 };
    let mut dir = f64::from(sign);
    let mut pos = x0;
    let mut prev = 0.0f64;
    let mut events = 0u32;
    loop {
        let gap = -(1.0 - rng.random::<f64>()).ln() / lambda;
        let next = prev + gap;
        if next >= t {
            break;
        }
        pos += c * dir * (next - prev);
        dir = -dir;
        prev = next;
        events += 1;
    }
    pos += c * dir * (t - prev);
    (pos, events, sign)
}

fn draw_linear_form<R: Rng>(spec: &ModelSpec, t: f64, rng: &mut R) -> (f64, u32, u32) {
    let n = spec.n();
    let mut value = 0.0;
    let mut events = 0u32;
    let mut sign_index = 0u32;
    for k in 0..n {
        let (pos, ev, sign) = sample_position(spec.params(k), t, rng);
        value += spec.coef(k) * pos;
        events += ev;
        sign_index = (sign_index << 1) | u32::from(sign > 0);
    }
    (value, events, sign_index)
}

/// `count` independent draws of L(t), deterministic in
/// (spec, t, count, seed) regardless of the rayon worker count.
pub fn sample_linear_form(spec: &ModelSpec, t: f64, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    if t <= 0.0 {
        return Err(Error::Domain(format!("sampling requires t > 0, got {t}")));
    }
    let n = spec.n();
    let mut rows = vec![(0.0f64, 0u32, 0u32); count];
    rows.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk_idx, chunk)| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(chunk_idx as u64);
            for slot in chunk.iter_mut() {
                *slot = draw_linear_form(spec, t, &mut rng);
            }
        });

    let mut values = Vec::with_capacity(count);
    let mut event_counts = Vec::with_capacity(count);
    let mut sign_indices = Vec::with_capacity(count);
    for (value, events, sign_index) in rows {
        let value = if events == 0 {
            // zero-event draws sit exactly on their singular location;
            // recompute through the shared formula so the match is bitwise
            let sigma = SignSeq::from_lex_index(n, sign_index as usize);
            singular_location(spec, t, &sigma)?
        } else {
            value
        };
        values.push(value);
        event_counts.push(events);
        sign_indices.push(sign_index);
    }
    Ok(SampleSet {
        t,
        n,
        values,
        event_counts,
        sign_indices,
        seed,
    })
}

/// Empirical mass estimate for one merged atom.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AtomEstimate {
    pub location: f64,
    pub expected_mass: f64,
    pub fraction: f64,
    pub std_error: f64,
    pub count: u64,
}

/// Zero-event draws grouped by initial signs and mapped onto the merged
/// atoms; positions are never compared by floating equality.
pub fn empirical_atom_masses(
    samples: &SampleSet,
    atoms: &[SingularAtom],
) -> Result<Vec<AtomEstimate>> {
    let slots = 1usize << samples.components();
    let mut slot_of_sign: Vec<Option<usize>> = vec![None; slots];
    for (a, atom) in atoms.iter().enumerate() {
        for &member in &atom.members {
            slot_of_sign[member] = Some(a);
        }
    }
    let mut counts = vec![0u64; atoms.len()];
    for i in 0..samples.len() {
        if samples.event_counts[i] == 0 {
            let sign = samples.sign_indices[i] as usize;
            let slot = slot_of_sign.get(sign).copied().flatten().ok_or_else(|| {
                Error::Internal(format!("initial sign index {sign} matches no atom"))
            })?;
            counts[slot] += 1;
        }
    }
    let n = samples.len() as f64;
    Ok(atoms
        .iter()
        .zip(&counts)
        .map(|(atom, &count)| {
            let fraction = count as f64 / n;
            AtomEstimate {
                location: atom.location,
                expected_mass: atom.mass,
                fraction,
                std_error: (fraction * (1.0 - fraction) / n).sqrt(),
                count,
            }
        })
        .collect())
}

/// (1/N) sum exp(i alpha value).
pub fn empirical_char_fn(samples: &SampleSet, alpha: f64) -> Complex64 {
    let mut acc = Complex64::default();
    for &v in &samples.values {
        acc += Complex64::from_polar(1.0, alpha * v);
    }
    acc / samples.len() as f64
}

/// Which draws a KS comparison runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsCondition {
    All,
    /// Only draws with at least one event, compared against the
    /// normalized AC distribution function.
    AcOnly,
}

/// Two-sided sup distance between the empirical CDF and a model CDF given
/// in the left-continuous convention F(x) = Pr{L < x}. Jumps are handled
/// by also probing just above each distinct value.
pub fn ks_statistic<F: Fn(f64) -> f64>(
    samples: &SampleSet,
    cdf_lt: F,
    condition: KsCondition,
) -> f64 {
    let mut xs: Vec<f64> = match condition {
        KsCondition::All => samples.values.clone(),
        KsCondition::AcOnly => samples
            .values
            .iter()
            .zip(&samples.event_counts)
            .filter(|(_, &e)| e >= 1)
            .map(|(&v, _)| v)
            .collect(),
    };
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let before = i as f64 / n;
        let after = j as f64 / n;
        let f_lt = cdf_lt(v);
        let f_le = cdf_lt(v.next_up());
        sup = sup.max((before - f_lt).abs()).max((after - f_le).abs());
        i = j;
    }
    sup
}

/// One row of the Kac-scaling experiment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KacRow {
    pub scale: f64,
    pub ks_distance: f64,
    pub limit_mean: f64,
    pub limit_variance: f64,
    pub samples: usize,
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 over (seed + golden * index)
    let mut z = seed.wrapping_add(index.wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Samples the linear form under Kac scaling lambda_k = M lambda_k^0,
/// c_k = sqrt(rho_k M lambda_k^0), and reports the KS distance to the
/// limiting Gaussian (mean sum a_k x_k^0, variance t sum rho_k a_k^2) for
/// each scale M.
pub fn kac_convergence(
    template: &ModelSpec,
    rhos: &[f64],
    scales: &[f64],
    t: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<KacRow>> {
    if rhos.len() != template.n() {
        return Err(Error::Dimension(format!(
            "{} diffusion coefficients for n = {}",
            rhos.len(),
            template.n()
        )));
    }
    if rhos.iter().any(|&r| r <= 0.0) {
        return Err(Error::Domain(
            "diffusion coefficients must be positive".into(),
        ));
    }
    if scales.iter().any(|&m| m < 1.0) {
        return Err(Error::Domain("scales must be >= 1".into()));
    }
    let mean = template.weighted_start();
    let variance: f64 = t
        * (0..template.n())
            .map(|k| rhos[k] * template.coef(k) * template.coef(k))
            .sum::<f64>();
    let sd = variance.sqrt();

    let mut rows = Vec::with_capacity(scales.len());
    for (i, &m) in scales.iter().enumerate() {
        let parts: Vec<(f64, f64, f64, f64)> = (0..template.n())
            .map(|k| {
                let lambda = m * template.rate(k);
                let speed = (rhos[k] * lambda).sqrt(); // c^2/lambda = rho exactly
                (lambda, speed, template.start(k), template.coef(k))
            })
            .collect();
        let spec_m = ModelSpec::from_f64_parts(&parts)?;
        let samples = sample_linear_form(&spec_m, t, count, mix_seed(seed, i as u64))?;
        let ks = ks_statistic(&samples, |x| normal_cdf(x, mean, sd), KsCondition::All);
        rows.push(KacRow {
            scale: m,
            ks_distance: ks,
            limit_mean: mean,
            limit_variance: variance,
            samples: count,
        });
    }
    Ok(rows)
}
