//! Exact commutative polynomial ring in the differential symbols
//! `T = d/dt` and `X = d/dx`, with arbitrary-precision rational
//! coefficients. Graded-lexicographic order with T > X fixes leading
//! terms, division and canonical printing.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A power product T^dt X^dx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub dt: u32,
    pub dx: u32,
}

impl Monomial {
    pub fn new(dt: u32, dx: u32) -> Self {
        Monomial { dt, dx }
    }

    pub fn total_degree(&self) -> u32 {
        self.dt + self.dx
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.dt <= other.dt && self.dx <= other.dx
    }
}

// Graded-lex with T > X: compare total degree first, then dt.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.total_degree(), self.dt).cmp(&(other.total_degree(), other.dt))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in the commuting symbols T and X; no zero coefficients are
/// stored, so equality of maps is equality in the ring.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct OperatorPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl OperatorPoly {
    pub fn zero() -> Self {
        OperatorPoly::default()
    }

    pub fn one() -> Self {
        OperatorPoly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = OperatorPoly::default();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(0, 0), c);
        }
        p
    }

    pub fn constant_i64(c: i64) -> Self {
        OperatorPoly::constant(BigRational::from_integer(BigInt::from(c)))
    }

    /// The symbol T = d/dt.
    pub fn t() -> Self {
        OperatorPoly::monomial(1, 0, BigRational::one())
    }

    /// The symbol X = d/dx.
    pub fn x() -> Self {
        OperatorPoly::monomial(0, 1, BigRational::one())
    }

    pub fn monomial(dt: u32, dx: u32, coef: BigRational) -> Self {
        let mut p = OperatorPoly::default();
        if !coef.is_zero() {
            p.terms.insert(Monomial::new(dt, dx), coef);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, dt: u32, dx: u32) -> BigRational {
        self.terms
            .get(&Monomial::new(dt, dx))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// Leading term under graded-lex (T > X).
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(Monomial::total_degree)
            .max()
            .unwrap_or(0)
    }

    fn insert_add(&mut self, m: Monomial, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, c: &BigRational) -> OperatorPoly {
        if c.is_zero() {
            return OperatorPoly::zero();
        }
        let terms = self.terms.iter().map(|(m, v)| (*m, v * c)).collect();
        OperatorPoly { terms }
    }

    pub fn pow(&self, e: u32) -> OperatorPoly {
        let mut acc = OperatorPoly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative with respect to the symbol T.
    pub fn d_dt_symbol(&self) -> OperatorPoly {
        let mut out = OperatorPoly::zero();
        for (m, c) in &self.terms {
            if m.dt > 0 {
                out.insert_add(
                    Monomial::new(m.dt - 1, m.dx),
                    &(c * BigRational::from_integer(BigInt::from(m.dt))),
                );
            }
        }
        out
    }

    /// Substitutes T -> s, X -> xi in complex arithmetic.
    pub fn eval_complex(&self, s: Complex64, xi: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        for (m, c) in &self.terms {
            let coeff = c.to_f64().unwrap_or(f64::NAN);
            acc += s.powu(m.dt) * xi.powu(m.dx) * coeff;
        }
        acc
    }

    /// Sum of |coefficient| as f64; the scale used to normalize symbol
    /// residuals.
    pub fn coeff_norm_l1(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().map(f64::abs).unwrap_or(f64::INFINITY))
            .sum()
    }

    /// Human-readable rendering in descending graded-lex order,
    /// e.g. `dt^2 + 2 dt - 4 dx^2`.
    pub fn render_text(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let is_const = m.dt == 0 && m.dx == 0;
            if !mag.is_one() || is_const {
                out.push_str(&format_rational(&mag));
                if !is_const {
                    out.push(' ');
                }
            }
            if m.dt > 0 {
                out.push_str("dt");
                if m.dt > 1 {
                    out.push_str(&format!("^{}", m.dt));
                }
                if m.dx > 0 {
                    out.push(' ');
                }
            }
            if m.dx > 0 {
                out.push_str("dx");
                if m.dx > 1 {
                    out.push_str(&format!("^{}", m.dx));
                }
            }
        }
        out
    }

    /// LaTeX rendering with partial-derivative symbols.
    pub fn render_latex(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let is_const = m.dt == 0 && m.dx == 0;
            if !mag.is_one() || is_const {
                if mag.denom().is_one() {
                    out.push_str(&mag.numer().to_string());
                } else {
                    out.push_str(&format!("\\tfrac{{{}}}{{{}}}", mag.numer(), mag.denom()));
                }
                if !is_const {
                    out.push(' ');
                }
            }
            if m.dt > 0 {
                out.push_str(&if m.dt > 1 {
                    format!("\\partial_t^{{{}}}", m.dt)
                } else {
                    "\\partial_t".into()
                });
                if m.dx > 0 {
                    out.push(' ');
                }
            }
            if m.dx > 0 {
                out.push_str(&if m.dx > 1 {
                    format!("\\partial_x^{{{}}}", m.dx)
                } else {
                    "\\partial_x".into()
                });
            }
        }
        out
    }
}

/// Canonical `p` or `p/q` rendering of a rational.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Debug for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_text())
    }
}

impl fmt::Display for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_text())
    }
}

impl Add for &OperatorPoly {
    type Output = OperatorPoly;
    fn add(self, rhs: &OperatorPoly) -> OperatorPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(*m, c);
        }
        out
    }
}

impl Sub for &OperatorPoly {
    type Output = OperatorPoly;
    fn sub(self, rhs: &OperatorPoly) -> OperatorPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(*m, &(-c.clone()));
        }
        out
    }
}

impl Neg for &OperatorPoly {
    type Output = OperatorPoly;
    fn neg(self) -> OperatorPoly {
        let terms = self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect();
        OperatorPoly { terms }
    }
}

impl Mul for &OperatorPoly {
    type Output = OperatorPoly;
    fn mul(self, rhs: &OperatorPoly) -> OperatorPoly {
        let mut out = OperatorPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.insert_add(Monomial::new(ma.dt + mb.dt, ma.dx + mb.dx), &(ca * cb));
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for OperatorPoly {
            type Output = OperatorPoly;
            fn $method(self, rhs: OperatorPoly) -> OperatorPoly {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for OperatorPoly {
    type Output = OperatorPoly;
    fn neg(self) -> OperatorPoly {
        -&self
    }
}

/// Attempts exact division of `p` by `d` via leading-term reduction under
/// graded-lex; returns the quotient when `p = d * q` holds in the ring.
pub fn poly_divides(d: &OperatorPoly, p: &OperatorPoly) -> Option<OperatorPoly> {
    assert!(!d.is_zero(), "division by the zero polynomial");
    let mut remainder = p.clone();
    let mut quotient = OperatorPoly::zero();
    let (lead_m, lead_c) = {
        let (m, c) = d.leading().expect("nonzero divisor");
        (*m, c.clone())
    };
    while !remainder.is_zero() {
        let (rm, rc) = {
            let (m, c) = remainder.leading().unwrap();
            (*m, c.clone())
        };
        if !lead_m.divides(&rm) {
            return None;
        }
        let qm = Monomial::new(rm.dt - lead_m.dt, rm.dx - lead_m.dx);
        let qc = rc / &lead_c;
        let qterm = OperatorPoly::monomial(qm.dt, qm.dx, qc);
        remainder = &remainder - &(&qterm * d);
        quotient = &quotient + &qterm;
    }
    Some(quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn difference_of_squares() {
        let t = OperatorPoly::t();
        let x2 = OperatorPoly::x().scale(&rat(2, 1));
        let prod = &(&t + &x2) * &(&t - &x2);
        let expect = &(&t * &t) - &(&OperatorPoly::x() * &OperatorPoly::x()).scale(&rat(4, 1));
        assert_eq!(prod, expect);
        assert_eq!(prod.render_text(), "dt^2 - 4 dx^2");
    }

    #[test]
    fn multiplicative_identity() {
        let p = OperatorPoly::monomial(2, 1, rat(-7, 3));
        assert_eq!(&p * &OperatorPoly::one(), p);
        assert_eq!(&p * &OperatorPoly::zero(), OperatorPoly::zero());
    }

    #[test]
    fn graded_lex_leading_term() {
        // T > X at equal total degree; higher total degree dominates
        let p = &(&OperatorPoly::x().pow(3) + &OperatorPoly::monomial(2, 1, rat(5, 1)))
            + &OperatorPoly::t();
        let (m, _) = p.leading().unwrap();
        assert_eq!((m.dt, m.dx), (2, 1));
    }

    #[test]
    fn divides_examples() {
        // x does not divide x + 1
        let x = OperatorPoly::x();
        let xp1 = &x + &OperatorPoly::one();
        assert!(poly_divides(&x, &xp1).is_none());
        // multiply-back on a nontrivial pair
        let d = &(&OperatorPoly::t() + &OperatorPoly::x().scale(&rat(3, 2))) + &OperatorPoly::one();
        let q = &OperatorPoly::t().pow(2) - &OperatorPoly::monomial(0, 2, rat(7, 5));
        let p = &d * &q;
        let got = poly_divides(&d, &p).unwrap();
        assert_eq!(got, q);
    }

    #[test]
    fn symbol_eval_examples() {
        let p =
            &(&OperatorPoly::t() * &OperatorPoly::t()) - &OperatorPoly::monomial(0, 2, rat(4, 1));
        let v = p.eval_complex(Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(v.norm() < 1e-15);
        let one = OperatorPoly::one();
        assert_eq!(
            one.eval_complex(Complex64::new(3.0, 1.0), Complex64::new(-2.0, 0.5)),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn eval_complex_matches_exact_rational_eval() {
        // exact-arithmetic oracle at rational points
        let p = &(&OperatorPoly::monomial(2, 1, rat(3, 4))
            + &OperatorPoly::monomial(0, 3, rat(-2, 5)))
            + &OperatorPoly::constant(rat(7, 8));
        let (s, xi) = (rat(1, 2), rat(-3, 2));
        let mut exact = BigRational::zero();
        for (m, c) in p.terms() {
            let mut term = c.clone();
            for _ in 0..m.dt {
                term *= &s;
            }
            for _ in 0..m.dx {
                term *= &xi;
            }
            exact += term;
        }
        let num = p.eval_complex(Complex64::new(0.5, 0.0), Complex64::new(-1.5, 0.0));
        assert!((num.re - exact.to_f64().unwrap()).abs() < 1e-14);
        assert_eq!(num.im, 0.0);
    }

    fn sparse_poly_strategy() -> impl Strategy<Value = OperatorPoly> {
        proptest::collection::vec(((0u32..5, 0u32..5), -9i64..10, 1i64..7), 0..6).prop_map(
            |terms| {
                let mut p = OperatorPoly::zero();
                for ((dt, dx), n, d) in terms {
                    p = &p + &OperatorPoly::monomial(dt, dx, rat(n, d));
                }
                p
            },
        )
    }

    proptest! {
        #[test]
        fn ring_axioms(a in sparse_poly_strategy(), b in sparse_poly_strategy(), c in sparse_poly_strategy()) {
            // commutativity (the property the determinant construction
            // rests on), associativity, distributivity
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn division_multiply_back(a in sparse_poly_strategy(), b in sparse_poly_strategy()) {
            prop_assume!(!a.is_zero());
            let p = &a * &b;
            let q = poly_divides(&a, &p);
            prop_assert_eq!(q, Some(b));
        }
    }
}
