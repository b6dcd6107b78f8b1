//! Domain types for linear forms of telegraph processes: exact scalars,
//! per-process parameters, sign sequences and the handful of scalar
//! aggregates (`c_sigma`, total rate) everything downstream consumes.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the number of components; 2^n is the matrix dimension
/// downstream, so 8 keeps the system matrices at 256 rows.
pub const DEFAULT_N_CAP: usize = 8;

/// An exact rational scalar with a cached `f64` view.
///
/// All model inputs are stored exactly: string inputs by their literal
/// digits, floats by their exact binary value. Operator algebra reads the
/// rational, numerics read the cached float.
#[derive(Clone, PartialEq)]
pub struct Scalar {
    exact: BigRational,
    float: f64,
}

impl Scalar {
    pub fn from_rational(exact: BigRational) -> Self {
        let float = exact.to_f64().unwrap_or(f64::NAN);
        Scalar { exact, float }
    }

    pub fn from_int(v: i64) -> Self {
        Scalar::from_rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// Exact binary value of a finite float.
    pub fn from_f64(v: f64) -> Result<Self> {
        let exact = BigRational::from_float(v)
            .ok_or_else(|| Error::Domain(format!("non-finite value {v}")))?;
        Ok(Scalar { exact, float: v })
    }

    /// Parses `"p/q"`, integers, and decimal literals (optionally with an
    /// exponent). Decimals are converted by their literal digits, so
    /// `"0.1"` becomes exactly 1/10.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Schema("empty numeric literal".into()));
        }
        if let Some((num, den)) = s.split_once('/') {
            let n = BigInt::from_str(num.trim())
                .map_err(|e| Error::Schema(format!("bad numerator {num:?}: {e}")))?;
            let d = BigInt::from_str(den.trim())
                .map_err(|e| Error::Schema(format!("bad denominator {den:?}: {e}")))?;
            if d.is_zero() {
                return Err(Error::Schema(format!("zero denominator in {s:?}")));
            }
            return Ok(Scalar::from_rational(BigRational::new(n, d)));
        }
        parse_decimal(s)
    }

    pub fn to_f64(&self) -> f64 {
        self.float
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.exact.is_positive()
    }
}

fn parse_decimal(s: &str) -> Result<Scalar> {
    let lower = s.to_ascii_lowercase();
    let (mantissa, exp) = match lower.split_once('e') {
        Some((m, e)) => {
            let exp: i64 = e
                .parse()
                .map_err(|_| Error::Schema(format!("bad exponent in {s:?}")))?;
            (m.to_string(), exp)
        }
        None => (lower, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(&mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Schema(format!("bad numeric literal {s:?}")));
    }
    let joined = format!("{int_part}{frac_part}");
    if joined.is_empty() || !joined.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Schema(format!("bad numeric literal {s:?}")));
    }
    let mut numer = BigInt::from_str(&joined).map_err(|e| Error::Schema(e.to_string()))?;
    if sign < 0 {
        numer = -numer;
    }
    let shift = exp - frac_part.len() as i64;
    let base = BigInt::from(10u32);
    let value = if shift >= 0 {
        BigRational::from_integer(numer * base.pow(shift as u32))
    } else {
        BigRational::new(numer, base.pow((-shift) as u32))
    };
    Ok(Scalar::from_rational(value))
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact.denom().is_one() {
            write!(f, "{}", self.exact.numer())
        } else {
            write!(f, "{}/{}", self.exact.numer(), self.exact.denom())
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({self})")
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        let raw = Raw::deserialize(deserializer)?;
        let text = match raw {
            Raw::Text(s) => s,
            Raw::Number(n) => n.to_string(),
        };
        Scalar::parse(&text).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Parameters of one Goldstein-Kac telegraph process.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelegraphParams {
    rate: Scalar,
    speed: Scalar,
    start: Scalar,
}

impl TelegraphParams {
    pub fn new(rate: Scalar, speed: Scalar, start: Scalar) -> Result<Self> {
        if !rate.is_positive() {
            return Err(Error::Domain(format!("rate must be positive, got {rate}")));
        }
        if !speed.is_positive() {
            return Err(Error::Domain(format!(
                "speed must be positive, got {speed}"
            )));
        }
        Ok(TelegraphParams { rate, speed, start })
    }

    pub fn from_f64(rate: f64, speed: f64, start: f64) -> Result<Self> {
        TelegraphParams::new(
            Scalar::from_f64(rate)?,
            Scalar::from_f64(speed)?,
            Scalar::from_f64(start)?,
        )
    }

    pub fn rate(&self) -> f64 {
        self.rate.to_f64()
    }

    pub fn speed(&self) -> f64 {
        self.speed.to_f64()
    }

    pub fn start(&self) -> f64 {
        self.start.to_f64()
    }

    pub fn rate_exact(&self) -> &BigRational {
        self.rate.exact()
    }

    pub fn speed_exact(&self) -> &BigRational {
        self.speed.exact()
    }

    pub fn start_exact(&self) -> &BigRational {
        self.start.exact()
    }
}

/// A joint direction state: one sign per component, -1 or +1.
///
/// The lexicographic position (with -1 before +1) is the canonical index
/// used for every matrix row/column ordering.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignSeq(Vec<i8>);

impl SignSeq {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::Dimension("empty sign sequence".into()));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain("sign entries must be -1 or +1".into()));
        }
        Ok(SignSeq(signs))
    }

    /// Sequence at `index` in lexicographic order (-1 < +1); bit `n-1-k`
    /// of the index carries the sign of position `k`.
    pub fn from_lex_index(n: usize, index: usize) -> Self {
        debug_assert!(index < (1 << n));
        let signs = (0..n)
            .map(|k| if index >> (n - 1 - k) & 1 == 1 { 1 } else { -1 })
            .collect();
        SignSeq(signs)
    }

    pub fn lex_index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, &s| (acc << 1) | usize::from(s > 0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn sign(&self, k: usize) -> i8 {
        self.0[k]
    }

    /// Copy with position `k` flipped.
    pub fn flip(&self, k: usize) -> SignSeq {
        let mut v = self.0.clone();
        v[k] = -v[k];
        SignSeq(v)
    }

    pub fn negated(&self) -> SignSeq {
        SignSeq(self.0.iter().map(|s| -s).collect())
    }
}

impl fmt::Debug for SignSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if *s > 0 { "+1" } else { "-1" })?;
        }
        write!(f, ")")
    }
}

/// One weighted component of the linear form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    #[serde(flatten)]
    pub params: TelegraphParams,
    #[serde(rename = "coef")]
    pub coefficient: Scalar,
}

/// The full model: n weighted telegraph processes. Immutable after
/// construction; the single source of truth for every computation.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    components: Vec<Component>,
    exact_mode: bool,
}

impl ModelSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        Self::with_mode(components, true)
    }

    fn with_mode(components: Vec<Component>, exact_mode: bool) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Schema("at least one component required".into()));
        }
        // deserialized components bypass TelegraphParams::new, so the
        // invariants are re-checked here
        for (k, c) in components.iter().enumerate() {
            if !c.params.rate.is_positive() {
                return Err(Error::Schema(format!(
                    "component {}: rate must be positive, got {}",
                    k + 1,
                    c.params.rate
                )));
            }
            if !c.params.speed.is_positive() {
                return Err(Error::Schema(format!(
                    "component {}: speed must be positive, got {}",
                    k + 1,
                    c.params.speed
                )));
            }
            if c.coefficient.is_zero() {
                return Err(Error::Schema(format!(
                    "coefficient a_{} must be nonzero",
                    k + 1
                )));
            }
        }
        Ok(ModelSpec {
            components,
            exact_mode,
        })
    }

    /// Programmatic float construction (used e.g. under Kac scaling, where
    /// speeds are irrational). Marks the spec as inexact so that atom
    /// merging falls back to a tolerance.
    pub fn from_f64_parts(parts: &[(f64, f64, f64, f64)]) -> Result<Self> {
        let components = parts
            .iter()
            .map(|&(rate, speed, start, coef)| {
                Ok(Component {
                    params: TelegraphParams::from_f64(rate, speed, start)?,
                    coefficient: Scalar::from_f64(coef)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_mode(components, false)
    }

    /// Builds an exact spec from (rate, speed, start, coef) literals in
    /// the same formats the JSON schema accepts.
    pub fn from_str_parts(parts: &[(&str, &str, &str, &str)]) -> Result<Self> {
        let components = parts
            .iter()
            .map(|&(rate, speed, start, coef)| {
                Ok(Component {
                    params: TelegraphParams::new(
                        Scalar::parse(rate)?,
                        Scalar::parse(speed)?,
                        Scalar::parse(start)?,
                    )?,
                    coefficient: Scalar::parse(coef)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ModelSpec::new(components)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct SpecFile {
            components: Vec<Component>,
        }
        let file: SpecFile = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        ModelSpec::new(file.components)
    }

    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct SpecFile<'a> {
            components: &'a [Component],
        }
        serde_json::to_string_pretty(&SpecFile {
            components: &self.components,
        })
        .expect("spec serialization cannot fail")
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn exact_mode(&self) -> bool {
        self.exact_mode
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn params(&self, k: usize) -> &TelegraphParams {
        &self.components[k].params
    }

    pub fn rate(&self, k: usize) -> f64 {
        self.components[k].params.rate()
    }

    pub fn speed(&self, k: usize) -> f64 {
        self.components[k].params.speed()
    }

    pub fn start(&self, k: usize) -> f64 {
        self.components[k].params.start()
    }

    pub fn coef(&self, k: usize) -> f64 {
        self.components[k].coefficient.to_f64()
    }

    pub fn coef_exact(&self, k: usize) -> &BigRational {
        self.components[k].coefficient.exact()
    }

    /// Sum of a_k x_k^0, the center of the support.
    pub fn weighted_start(&self) -> f64 {
        (0..self.n()).map(|k| self.coef(k) * self.start(k)).sum()
    }

    pub fn weighted_start_exact(&self) -> BigRational {
        (0..self.n())
            .map(|k| self.coef_exact(k) * self.components[k].params.start_exact())
            .sum()
    }
}

/// All 2^n sign sequences in lexicographic order (first all-(-1), last
/// all-(+1)), capped at [`DEFAULT_N_CAP`].
pub fn enumerate_sign_sequences(n: usize) -> Result<Vec<SignSeq>> {
    enumerate_sign_sequences_capped(n, DEFAULT_N_CAP)
}

pub fn enumerate_sign_sequences_capped(n: usize, cap: usize) -> Result<Vec<SignSeq>> {
    if n == 0 || n > cap {
        return Err(Error::SizeLimit { n, cap });
    }
    Ok((0..1usize << n)
        .map(|j| SignSeq::from_lex_index(n, j))
        .collect())
}

/// Number of positions where two sequences differ.
pub fn hamming_distance(a: &SignSeq, b: &SignSeq) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "sign sequences of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.signs()
        .iter()
        .zip(b.signs())
        .filter(|(x, y)| x != y)
        .count())
}

/// Effective drift c_sigma = sum_k a_k i_k c_k of the joint state `sigma`.
pub fn sigma_speed(spec: &ModelSpec, sigma: &SignSeq) -> Result<f64> {
    if sigma.len() != spec.n() {
        return Err(Error::Dimension(format!(
            "sign sequence of length {} against n = {}",
            sigma.len(),
            spec.n()
        )));
    }
    let mut acc = 0.0;
    for k in 0..spec.n() {
        acc += spec.coef(k) * f64::from(sigma.sign(k)) * spec.speed(k);
    }
    Ok(acc)
}

pub fn sigma_speed_exact(spec: &ModelSpec, sigma: &SignSeq) -> Result<BigRational> {
    if sigma.len() != spec.n() {
        return Err(Error::Dimension(format!(
            "sign sequence of length {} against n = {}",
            sigma.len(),
            spec.n()
        )));
    }
    let mut acc = BigRational::zero();
    for k in 0..spec.n() {
        let term = spec.coef_exact(k) * spec.params(k).speed_exact();
        if sigma.sign(k) > 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Total event rate Lambda = sum_k lambda_k.
pub fn lambda_total(spec: &ModelSpec) -> f64 {
    (0..spec.n()).map(|k| spec.rate(k)).sum()
}

pub fn lambda_total_exact(spec: &ModelSpec) -> BigRational {
    (0..spec.n())
        .map(|k| spec.params(k).rate_exact().clone())
        .sum()
}

#[cfg(test)]
pub(crate) fn spec_from_strs(parts: &[(&str, &str, &str, &str)]) -> ModelSpec {
    ModelSpec::from_str_parts(parts).unwrap()
}
