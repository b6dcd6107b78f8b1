//! Numerical certificates tying the symbolic governing operator to the
//! probabilistic objects: symbol-root vanishing, the direction-state
//! system against the product CF, CF-derivative initial conditions, and
//! an advisory finite-difference residual on the smooth interior.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear_form::{
    ac_density_conv, char_fn_l, exp_sum_representation, singular_atoms, support,
};
use crate::model::{
    enumerate_sign_sequences_capped, hamming_distance, lambda_total, Component, ModelSpec, Scalar,
    TelegraphParams,
};
use crate::numeric::{central_offsets, fd_weights, integrate_ode, OdeOptions};
use crate::operator_algebra::{governing_operator, OperatorPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    Passed,
    Failed,
    /// Advisory outcome that neither passes nor fails (non-monotone
    /// refinement behavior in the finite-difference check).
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Detail {
    pub input: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub status: CheckStatus,
    pub details: Vec<Detail>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(
        check_name: &str,
        tolerance: f64,
        details: Vec<Detail>,
        notes: Vec<String>,
    ) -> VerificationReport {
        let max_residual = details.iter().map(|d| d.residual).fold(0.0, f64::max);
        let passed = max_residual <= tolerance;
        VerificationReport {
            check_name: check_name.into(),
            max_residual,
            tolerance,
            passed,
            status: if passed {
                CheckStatus::Passed
            } else {
                CheckStatus::Failed
            },
            details,
            notes,
        }
    }
}

/// Every exponent mu_sigma of the CF representation must be a root of the
/// operator symbol P(s, i alpha); confluent (repeated-root) cases are also
/// checked through d^j P/ds^j. Residuals are normalized by
/// 1 + |P| max(1, |mu|)^(2^n).
pub fn symbol_root_check(spec: &ModelSpec, alphas: &[f64]) -> Result<VerificationReport> {
    let p = governing_operator(spec)?;
    let order = 1u32 << spec.n();
    // symbol derivatives in s for confluent roots
    let max_power = spec.n(); // t-power of a term never exceeds n
    let mut derivs = vec![p];
    for _ in 0..max_power {
        let next = derivs.last().unwrap().d_dt_symbol();
        derivs.push(next);
    }
    let norms: Vec<f64> = derivs.iter().map(OperatorPoly::coeff_norm_l1).collect();

    let mut details = Vec::new();
    for &alpha in alphas {
        let xi = Complex64::new(0.0, alpha);
        let rep = exp_sum_representation(spec, alpha);
        let mut worst = 0.0f64;
        for term in &rep.terms {
            let mu = term.exponent;
            for j in 0..=term.t_power as usize {
                let value = derivs[j].eval_complex(mu, xi);
                let denom = 1.0 + norms[j] * mu.norm().max(1.0).powi(order as i32);
                worst = worst.max(value.norm() / denom);
            }
        }
        details.push(Detail {
            input: format!("alpha = {alpha}"),
            residual: worst,
        });
    }
    Ok(VerificationReport::new(
        "symbol_root_check",
        1e-8,
        details,
        Vec::new(),
    ))
}

/// Builds M(alpha) = i alpha diag(c_sigma) - Lambda_n in complex
/// arithmetic.
fn system_matrix_complex(spec: &ModelSpec, alpha: f64, flip: bool) -> Result<Vec<Vec<Complex64>>> {
    let n = spec.n();
    let seqs = enumerate_sign_sequences_capped(n, 6)?;
    let dim = seqs.len();
    let lam = lambda_total(spec);
    let sign = if flip { -1.0 } else { 1.0 };
    let mut m = vec![vec![Complex64::default(); dim]; dim];
    for s in 0..dim {
        let speed = crate::model::sigma_speed(spec, &seqs[s])?;
        m[s][s] = Complex64::new(-lam, sign * alpha * speed);
        for t in 0..dim {
            if s != t && hamming_distance(&seqs[s], &seqs[t])? == 1 {
                let k = seqs[s]
                    .signs()
                    .iter()
                    .zip(seqs[t].signs())
                    .position(|(a, b)| a != b)
                    .expect("distance-1 pair");
                m[s][t] = Complex64::new(spec.rate(k), 0.0);
            }
        }
    }
    Ok(m)
}

fn integrate_system(
    m: &[Vec<Complex64>],
    spec: &ModelSpec,
    alpha: f64,
    t: f64,
) -> Result<Complex64> {
    let dim = m.len();
    let phase = Complex64::from_polar(1.0, alpha * spec.weighted_start());
    let y0 = vec![phase / dim as f64; dim];
    let y = integrate_ode(
        |_, y, dy| {
            for (r, row) in m.iter().enumerate() {
                let mut acc = Complex64::default();
                for (c, v) in row.iter().enumerate() {
                    acc += v * y[c];
                }
                dy[r] = acc;
            }
        },
        0.0,
        t,
        y0,
        &OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_steps: 2_000_000,
        },
    )?;
    Ok(y.iter().sum())
}

/// Fourier-transforms the first-order direction-state system, integrates
/// the resulting linear ODE d f/dt = [i alpha diag(c) - Lambda] f from the
/// uniform initial split, and compares the aggregated transform against
/// the product-formula CF. The transform sign convention is validated at
/// the first frequency and flipped (with a note) if the opposite one
/// matches.
pub fn system_cf_check(spec: &ModelSpec, alphas: &[f64], t: f64) -> Result<VerificationReport> {
    if spec.n() > 6 {
        return Err(Error::SizeLimit {
            n: spec.n(),
            cap: 6,
        });
    }
    if alphas.is_empty() {
        return Err(Error::Domain("need at least one frequency".into()));
    }
    let mut notes = Vec::new();
    // resolve the sign convention once
    let probe = alphas[0];
    let target = char_fn_l(spec, probe, t);
    let plain = (integrate_system(&system_matrix_complex(spec, probe, false)?, spec, probe, t)?
        - target)
        .norm();
    let mut flip = false;
    if plain > 1e-6 {
        let flipped =
            (integrate_system(&system_matrix_complex(spec, probe, true)?, spec, probe, t)?
                - target)
                .norm();
        if flipped < plain * 1e-3 {
            flip = true;
            notes.push(
                "transform convention flipped: d f/dt = [-i alpha diag(c) - Lambda] f".into(),
            );
        }
    }
    if !flip {
        notes.push("transform convention: d f/dt = [i alpha diag(c) - Lambda] f".into());
    }

    let mut details = Vec::new();
    for &alpha in alphas {
        let m = system_matrix_complex(spec, alpha, flip)?;
        let total = integrate_system(&m, spec, alpha, t)?;
        let residual = (total - char_fn_l(spec, alpha, t)).norm();
        details.push(Detail {
            input: format!("alpha = {alpha}, t = {t}"),
            residual,
        });
    }
    Ok(VerificationReport::new(
        "system_cf_check",
        1e-8,
        details,
        notes,
    ))
}

/// Which linear form of two processes to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSign {
    Sum,
    Difference,
}

/// CF-derivative initial conditions for the sum/difference of two
/// processes: at t = 0 the derivatives of orders 0..3 must equal
/// phase * {1, 0, -(c1^2+c2^2) a^2, 2(l1 c1^2 + l2 c2^2) a^2}.
pub fn initial_condition_check(
    p1: &TelegraphParams,
    p2: &TelegraphParams,
    sign: PairSign,
) -> Result<VerificationReport> {
    let coef2 = match sign {
        PairSign::Sum => 1,
        PairSign::Difference => -1,
    };
    let spec = ModelSpec::new(vec![
        Component {
            params: p1.clone(),
            coefficient: Scalar::from_int(1),
        },
        Component {
            params: p2.clone(),
            coefficient: Scalar::from_int(coef2),
        },
    ])?;
    let (l1, c1) = (p1.rate(), p1.speed());
    let (l2, c2) = (p2.rate(), p2.speed());

    let mut details = Vec::new();
    for i in 0..11 {
        let alpha = -2.5 + 0.5 * i as f64;
        let rep = exp_sum_representation(&spec, alpha);
        let phase = rep.phase;
        let a2 = alpha * alpha;
        let expected = [
            phase,
            Complex64::default(),
            phase * (-(c1 * c1 + c2 * c2) * a2),
            phase * (2.0 * (l1 * c1 * c1 + l2 * c2 * c2) * a2),
        ];
        for (k, want) in expected.iter().enumerate() {
            let got = rep.derivative_at_zero(k as u32);
            let residual = (got - want).norm() / want.norm().max(1.0);
            details.push(Detail {
                input: format!("alpha = {alpha}, k = {k}"),
                residual,
            });
        }
    }
    Ok(VerificationReport::new(
        "initial_condition_check",
        1e-10,
        details,
        Vec::new(),
    ))
}

/// Resolution plan for the finite-difference residual check.
#[derive(Debug, Clone, Copy)]
pub struct FdGridSpec {
    pub nt: usize,
    pub nx: usize,
    pub refinements: usize,
}

impl Default for FdGridSpec {
    fn default() -> Self {
        FdGridSpec {
            nt: 12,
            nx: 48,
            refinements: 2,
        }
    }
}

/// Stencil weights for one operator term.
struct TermStencil {
    coef: f64,
    wt: Vec<f64>,
    wx: Vec<f64>,
}

fn term_stencils(op: &OperatorPoly, dt: f64, dx: f64) -> (Vec<TermStencil>, usize, usize) {
    use num_traits::ToPrimitive;
    let mut ext_t = 0usize;
    let mut ext_x = 0usize;
    let mut stencils = Vec::new();
    for (m, c) in op.terms() {
        let wt = if m.dt == 0 {
            vec![1.0]
        } else {
            let offs = central_offsets(m.dt as usize);
            fd_weights(m.dt as usize, &offs)
                .iter()
                .map(|w| w / dt.powi(m.dt as i32))
                .collect()
        };
        let wx = if m.dx == 0 {
            vec![1.0]
        } else {
            let offs = central_offsets(m.dx as usize);
            fd_weights(m.dx as usize, &offs)
                .iter()
                .map(|w| w / dx.powi(m.dx as i32))
                .collect()
        };
        ext_t = ext_t.max(wt.len() / 2);
        ext_x = ext_x.max(wx.len() / 2);
        stencils.push(TermStencil {
            coef: c.to_f64().unwrap(),
            wt,
            wx,
        });
    }
    (stencils, ext_t, ext_x)
}

/// Applies the operator to grid values at interior index (i, j); the grid
/// is values[t index][x index].
fn fd_apply(stencils: &[TermStencil], values: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for s in stencils {
        let ht = s.wt.len() / 2;
        let hx = s.wx.len() / 2;
        let mut term = 0.0;
        for (a, wt) in s.wt.iter().enumerate() {
            let row = &values[i + a - ht];
            let mut inner = 0.0;
            for (b, wx) in s.wx.iter().enumerate() {
                inner += wx * row[j + b - hx];
            }
            term += wt * inner;
        }
        acc += s.coef * term;
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct FdLevel {
    pub dt: f64,
    pub dx: f64,
    pub interior_points: usize,
    pub max_residual: f64,
}

/// Applies the governing operator to the AC density on a space-time grid
/// with 4th-order central stencils, excluding 5 grid cells around every
/// singular trajectory (the support boundary is the extreme pair). The
/// reported "residual" of the check is the worst shortfall factor
/// 2.8/ratio across refinements, so passing means every refinement cut
/// the residual by at least 2.8x; non-monotone behavior is inconclusive
/// rather than failing.
pub fn fd_residual(
    spec: &ModelSpec,
    t_window: (f64, f64),
    grid: &FdGridSpec,
) -> Result<VerificationReport> {
    if spec.n() > 2 {
        return Err(Error::Domain(
            "fd_residual supports n <= 2; higher orders are disabled".into(),
        ));
    }
    let (t_lo, t_hi) = t_window;
    if t_lo.is_nan() || t_hi.is_nan() || t_lo <= 0.0 || t_hi <= t_lo {
        return Err(Error::Domain(format!("bad t window [{t_lo}, {t_hi}]")));
    }
    if grid.refinements < 1 {
        return Err(Error::Domain("need at least one refinement".into()));
    }
    let op = governing_operator(spec)?;
    let atoms = singular_atoms(spec, t_hi)?; // member sets are t-independent
    let speeds: Vec<f64> = atoms
        .iter()
        .map(|a| {
            let sigma = crate::model::SignSeq::from_lex_index(spec.n(), a.members[0]);
            crate::model::sigma_speed(spec, &sigma)
        })
        .collect::<Result<_>>()?;
    let center0 = spec.weighted_start();

    let mut levels: Vec<FdLevel> = Vec::new();
    for r in 0..=grid.refinements {
        let nt = grid.nt << r;
        let nx = grid.nx << r;
        let dt = (t_hi - t_lo) / nt as f64;
        let (lo_x, hi_x) = support(spec, t_hi * 1.05);
        let dx = (hi_x - lo_x) / nx as f64;
        let (stencils, ext_t, ext_x) = term_stencils(&op, dt, dx);
        if t_lo - ext_t as f64 * dt <= 0.0 {
            return Err(Error::Domain(format!(
                "t window too close to 0 for the stencil extent {ext_t}"
            )));
        }
        // tabulate density on the extended grid
        let rows = nt + 1 + 2 * ext_t;
        let cols = nx + 1 + 2 * ext_x;
        let t_of = |i: usize| t_lo + (i as f64 - ext_t as f64) * dt;
        let x_of = |j: usize| lo_x + (j as f64 - ext_x as f64) * dx;
        let mut values = vec![vec![0.0f64; cols]; rows];
        for (i, row) in values.iter_mut().enumerate() {
            let t = t_of(i);
            for (j, v) in row.iter_mut().enumerate() {
                let x = x_of(j);
                let (slo, shi) = support(spec, t);
                *v = if x <= slo || x >= shi {
                    0.0
                } else {
                    ac_density_conv(spec, t, x)?
                };
            }
        }
        // interior evaluation with the 5-cell singular-trajectory margin
        let margin = 5.0 * dx;
        let mut max_residual = 0.0f64;
        let mut count = 0usize;
        for i in ext_t..rows - ext_t {
            for j in ext_x..cols - ext_x {
                let x = x_of(j);
                let excluded = (0..=2 * ext_t).any(|a| {
                    let t_row = t_of(i + a - ext_t);
                    speeds
                        .iter()
                        .any(|s| (x - (center0 + t_row * s)).abs() <= margin)
                });
                if excluded {
                    continue;
                }
                let res = fd_apply(&stencils, &values, i, j).abs();
                max_residual = max_residual.max(res);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::Domain(
                "no interior points survive the singular-trajectory margins; refine the grid"
                    .into(),
            ));
        }
        levels.push(FdLevel {
            dt,
            dx,
            interior_points: count,
            max_residual,
        });
    }

    let required = 2.8f64;
    let mut details = Vec::new();
    let mut monotone = true;
    for w in levels.windows(2) {
        let ratio = w[0].max_residual / w[1].max_residual;
        if ratio.is_nan() || ratio <= 1.0 {
            monotone = false;
        }
        details.push(Detail {
            input: format!(
                "refine dt {:.4e} -> {:.4e}: residual {:.4e} -> {:.4e} (ratio {:.2})",
                w[0].dt, w[1].dt, w[0].max_residual, w[1].max_residual, ratio
            ),
            residual: required / ratio.max(1e-300),
        });
    }
    let notes = levels
        .iter()
        .map(|l| {
            format!(
                "dt = {:.4e}, dx = {:.4e}: interior max residual {:.6e} over {} points",
                l.dt, l.dx, l.max_residual, l.interior_points
            )
        })
        .collect();
    let mut report = VerificationReport::new("fd_residual", 1.0, details, notes);
    if !monotone && !report.passed {
        report.status = CheckStatus::Inconclusive;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec_from_strs;
    use num_traits::Zero;

    fn generic_n2() -> ModelSpec {
        spec_from_strs(&[("1", "3", "1/2", "1"), ("2", "5", "-1", "1")])
    }

    #[test]
    fn symbol_roots_n1_quadratic() {
        // roots -lambda +/- sqrt(lambda^2 - c^2 a^2) of s^2 + 2 lambda s + c^2 a^2
        let spec = spec_from_strs(&[("2", "3", "0", "1")]);
        let alphas: Vec<f64> = (1..=20).map(|i| -3.0 + 0.3 * i as f64).collect();
        let report = symbol_root_check(&spec, &alphas).unwrap();
        assert!(report.passed, "max residual {}", report.max_residual);
        assert!(report.max_residual < 1e-12);
    }

    #[test]
    fn symbol_roots_n2_and_n3() {
        let alphas: Vec<f64> = (0..25).map(|i| -4.8 + 0.4 * i as f64).collect();
        for spec in [
            generic_n2(),
            spec_from_strs(&[
                ("1", "2", "0", "1"),
                ("1/2", "3", "1", "-1"),
                ("3", "1/4", "-2", "2"),
            ]),
        ] {
            let report = symbol_root_check(&spec, &alphas).unwrap();
            assert!(
                report.passed,
                "n = {}: max residual {}",
                spec.n(),
                report.max_residual
            );
        }
    }

    #[test]
    fn symbol_roots_confluent_alpha() {
        // branch point of component 1 with lambda = c = 1: alpha = 1
        let spec = spec_from_strs(&[("1", "1", "0", "1"), ("1", "1", "0", "1")]);
        let report = symbol_root_check(&spec, &[1.0, 0.0]).unwrap();
        assert!(report.passed, "max residual {}", report.max_residual);
    }

    #[test]
    fn governing_constant_term_identity() {
        // P(0, 0) = 0 exactly: the zero-frequency exponent with all
        // directions positive is a root at alpha = 0
        let p = governing_operator(&generic_n2()).unwrap();
        assert!(p.coeff(0, 0).is_zero());
    }

    #[test]
    fn system_cf_matches_product_formula() {
        let spec = generic_n2();
        let report = system_cf_check(&spec, &[0.5, 1.0, 2.0], 1.0).unwrap();
        assert!(report.passed, "max residual {}", report.max_residual);
        assert!(report.notes[0].contains("i alpha diag(c)"));
    }

    #[test]
    fn system_cf_alpha_zero_conserves_probability() {
        let spec = generic_n2();
        let report = system_cf_check(&spec, &[0.0], 2.0).unwrap();
        assert!(report.max_residual < 1e-12);
    }

    #[test]
    fn system_cf_residual_stays_small_at_n4() {
        let spec = spec_from_strs(&[
            ("1", "1", "0", "1"),
            ("2", "1/2", "1", "-1"),
            ("1/2", "2", "0", "1"),
            ("3/2", "1", "-1", "1/2"),
        ]);
        let report = system_cf_check(&spec, &[0.7, 1.5], 1.0).unwrap();
        assert!(report.max_residual < 1e-8, "max {}", report.max_residual);
    }

    #[test]
    fn system_cf_single_process() {
        let spec = spec_from_strs(&[("1", "1", "0", "1")]);
        let report = system_cf_check(&spec, &[0.5, 1.0, 3.0], 1.0).unwrap();
        assert!(report.max_residual < 1e-10, "max {}", report.max_residual);
    }

    #[test]
    fn initial_conditions_for_random_pairs() {
        let pairs = [
            ((1.0, 1.0, 0.0), (1.0, 1.0, 0.0)),
            ((1.5, 0.5, 0.3), (0.7, 2.0, -1.1)),
            ((3.0, 0.25, -0.5), (0.5, 4.0, 0.25)),
        ];
        for ((l1, c1, x1), (l2, c2, x2)) in pairs {
            let p1 = TelegraphParams::from_f64(l1, c1, x1).unwrap();
            let p2 = TelegraphParams::from_f64(l2, c2, x2).unwrap();
            for sign in [PairSign::Sum, PairSign::Difference] {
                let report = initial_condition_check(&p1, &p2, sign).unwrap();
                assert!(
                    report.passed,
                    "{l1} {c1} {l2} {c2} {sign:?}: max residual {}",
                    report.max_residual
                );
            }
        }
    }

    #[test]
    fn initial_conditions_phase_invariance() {
        // shifting both starts changes only the phase, not the residuals
        let p1 = TelegraphParams::from_f64(1.2, 0.8, 0.0).unwrap();
        let p2 = TelegraphParams::from_f64(0.6, 1.4, 0.0).unwrap();
        let r0 = initial_condition_check(&p1, &p2, PairSign::Sum).unwrap();
        let q1 = TelegraphParams::from_f64(1.2, 0.8, 2.5).unwrap();
        let q2 = TelegraphParams::from_f64(0.6, 1.4, 2.5).unwrap();
        let r1 = initial_condition_check(&q1, &q2, PairSign::Sum).unwrap();
        for (a, b) in r0.details.iter().zip(&r1.details) {
            assert!((a.residual - b.residual).abs() < 1e-10);
        }
    }

    #[test]
    fn fd_constant_in_x_reduces_to_time_part() {
        // f(t, x) = e^{-t}: every term with an x-derivative vanishes
        let spec = generic_n2();
        let op = governing_operator(&spec).unwrap();
        let (dt, dx) = (0.01, 0.02);
        let (stencils, ext_t, ext_x) = term_stencils(&op, dt, dx);
        let rows = 2 * ext_t + 1;
        let cols = 2 * ext_x + 1;
        let values: Vec<Vec<f64>> = (0..rows)
            .map(|i| {
                let t = 1.0 + (i as f64 - ext_t as f64) * dt;
                vec![(-t).exp(); cols]
            })
            .collect();
        let full = fd_apply(&stencils, &values, ext_t, ext_x);
        // pure-T part applied to e^{-t} at t = 1: sum coef(dt,0) (-1)^k e^{-1}
        use num_traits::ToPrimitive;
        let analytic: f64 = op
            .terms()
            .filter(|(m, _)| m.dx == 0)
            .map(|(m, c)| c.to_f64().unwrap() * (-1.0f64).powi(m.dt as i32) * (-1.0f64).exp())
            .sum();
        assert!(
            (full - analytic).abs() < 1e-5 * analytic.abs().max(1.0),
            "{full} vs {analytic}"
        );
    }

    #[test]
    fn fd_residual_single_telegraph_converges() {
        let spec = spec_from_strs(&[("1", "1", "0", "1")]);
        let report = fd_residual(
            &spec,
            (0.8, 1.2),
            &FdGridSpec {
                nt: 8,
                nx: 32,
                refinements: 2,
            },
        )
        .unwrap();
        assert!(
            report.passed,
            "shortfall {} notes {:?}",
            report.max_residual, report.notes
        );
    }
}
