//! The acceptance suite: one runner per criterion, each with frozen seeds
//! and pinned tolerances. The `acceptance` integration tests and the
//! `selftest` CLI command both dispatch here.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::linear_form::{ac_density, char_fn_l, singular_atoms, Cdf};
use crate::model::{lambda_total, Component, ModelSpec, Scalar, TelegraphParams};
use crate::montecarlo::{
    empirical_atom_masses, empirical_char_fn, kac_convergence, ks_statistic, sample_linear_form,
    KsCondition,
};
use crate::numeric::integrate;
use crate::operator_algebra::{
    build_lambda_matrix, build_system_matrix, det_cofactor, det_schur, governing_operator,
    pair_operator_closed_form, pair_operator_telegraph_heat_form, poly_divides, OperatorPoly,
};
use crate::telegraph;
use crate::verifier::{
    fd_residual, initial_condition_check, symbol_root_check, system_cf_check, CheckStatus,
    FdGridSpec, PairSign,
};

pub const CRITERIA_COUNT: usize = 14;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Advisory criteria report but do not gate the suite.
    pub advisory: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{:2}] {} ({:.2}s) - {}",
            if self.passed {
                "PASS"
            } else if self.advisory {
                "WARN"
            } else {
                "FAIL"
            },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

fn seeded(tag: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(0x5EC7_7E57_0000 ^ tag)
}

fn draw_rational(rng: &mut ChaCha12Rng) -> Scalar {
    let numer = rng.random_range(1..=24i64);
    let denom = rng.random_range(1..=4i64);
    Scalar::parse(&format!("{numer}/{denom}")).unwrap()
}

fn draw_params(rng: &mut ChaCha12Rng) -> TelegraphParams {
    TelegraphParams::new(
        draw_rational(rng),
        draw_rational(rng),
        Scalar::from_int(rng.random_range(-2..=2i64)),
    )
    .unwrap()
}

fn pair_spec(p1: &TelegraphParams, p2: &TelegraphParams, a2: i64) -> ModelSpec {
    ModelSpec::new(vec![
        Component {
            params: p1.clone(),
            coefficient: Scalar::from_int(1),
        },
        Component {
            params: p2.clone(),
            coefficient: Scalar::from_int(a2),
        },
    ])
    .unwrap()
}

fn draw_spec(rng: &mut ChaCha12Rng, n: usize) -> ModelSpec {
    let components = (0..n)
        .map(|_| {
            let coef_mag = draw_rational(rng);
            let sign = if rng.random::<bool>() { 1 } else { -1 };
            let coef =
                Scalar::parse(&format!("{}{}", if sign < 0 { "-" } else { "" }, coef_mag)).unwrap();
            Component {
                params: draw_params(rng),
                coefficient: coef,
            }
        })
        .collect();
    ModelSpec::new(components).unwrap()
}

fn result(
    id: usize,
    name: &'static str,
    advisory: bool,
    started: Instant,
    passed: bool,
    detail: String,
) -> CriterionResult {
    CriterionResult {
        id,
        name,
        passed,
        advisory,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// 1. Exact closed-form fourth-order operator identity for both
///    coefficient signs, 20 draws.
fn closed_form_identity() -> CriterionResult {
    let start = Instant::now();
    let mut rng = seeded(1);
    let mut ok = 0;
    for _ in 0..20 {
        let p1 = draw_params(&mut rng);
        let p2 = draw_params(&mut rng);
        let reference = pair_operator_closed_form(&p1, &p2);
        let sum = governing_operator(&pair_spec(&p1, &p2, 1)).unwrap();
        let diff = governing_operator(&pair_spec(&p1, &p2, -1)).unwrap();
        if sum == reference && diff == reference {
            ok += 1;
        }
    }
    result(
        1,
        "fourth-order operator identity (sum and difference)",
        false,
        start,
        ok == 20,
        format!("{ok}/20 draws exact"),
    )
}

/// 2. Symmetric-case factorization (T + 2l)^2 (T^2 + 4l T - 4 c^2 X^2).
fn symmetric_factorization() -> CriterionResult {
    let start = Instant::now();
    let mut rng = seeded(2);
    let mut ok = 0;
    let trials = 5;
    for _ in 0..trials {
        let lambda = draw_rational(&mut rng);
        let speed = draw_rational(&mut rng);
        let p = TelegraphParams::new(lambda.clone(), speed.clone(), Scalar::from_int(0)).unwrap();
        let spec = pair_spec(&p, &p, 1);
        let governing = governing_operator(&spec).unwrap();
        let two_l = num_rational::BigRational::from_integer(2.into()) * lambda.exact();
        let factor = (&OperatorPoly::t() + &OperatorPoly::constant(two_l.clone())).pow(2);
        let four_c2 =
            num_rational::BigRational::from_integer(4.into()) * speed.exact() * speed.exact();
        let inner = &(&OperatorPoly::t().pow(2)
            + &OperatorPoly::t()
                .scale(&(num_rational::BigRational::from_integer(2.into()) * &two_l)))
            - &OperatorPoly::monomial(0, 2, four_c2);
        let expected = &factor * &inner;
        if governing == expected && poly_divides(&factor, &governing) == Some(inner) {
            ok += 1;
        }
    }
    result(
        2,
        "symmetric-case operator factorization",
        false,
        start,
        ok == trials,
        format!("{ok}/{trials} symmetric draws factor exactly"),
    )
}

/// 3. Expanded telegraph-plus-heat factored form equals the closed form.
fn telegraph_heat_identity() -> CriterionResult {
    let start = Instant::now();
    let mut rng = seeded(3);
    let mut ok = 0;
    for _ in 0..10 {
        let p1 = draw_params(&mut rng);
        let p2 = draw_params(&mut rng);
        if pair_operator_closed_form(&p1, &p2) == pair_operator_telegraph_heat_form(&p1, &p2) {
            ok += 1;
        }
    }
    result(
        3,
        "telegraph-plus-heat factored form identity",
        false,
        start,
        ok == 10,
        format!("{ok}/10 draws exact"),
    )
}

/// 4. det_schur = det_cofactor exactly for n in {2, 3}, 20 specs each.
fn determinant_oracle() -> CriterionResult {
    let start = Instant::now();
    let mut rng = seeded(4);
    let mut ok = 0;
    let mut total = 0;
    for n in [2usize, 3] {
        for _ in 0..20 {
            total += 1;
            let spec = draw_spec(&mut rng, n);
            let system = build_system_matrix(&spec).unwrap();
            if det_schur(&system).unwrap() == det_cofactor(&system).unwrap() {
                ok += 1;
            }
        }
    }
    result(
        4,
        "Schur recursion vs cofactor determinant",
        false,
        start,
        ok == total,
        format!("{ok}/{total} specs agree exactly"),
    )
}

/// 5. Coupling-matrix structure for n <= 8 plus the displayed n = 2 and
///    n = 3 patterns.
fn lambda_structure() -> CriterionResult {
    use num_rational::BigRational;
    use num_traits::Zero;
    let start = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut rng = seeded(5);
    for n in 1..=8usize {
        let spec = draw_spec(&mut rng, n);
        let m = build_lambda_matrix(&spec).unwrap();
        if !m.is_symmetric() {
            failures.push(format!("n={n}: not symmetric"));
        }
        for r in 0..m.dim() {
            let mut sum = BigRational::zero();
            let mut nonzeros = 0;
            for c in 0..m.dim() {
                let v = m.at(r, c).coeff(0, 0);
                if !v.is_zero() {
                    nonzeros += 1;
                }
                sum += v;
            }
            if !sum.is_zero() {
                failures.push(format!("n={n} row {r}: sum {sum}"));
            }
            if nonzeros != n + 1 {
                failures.push(format!("n={n} row {r}: {nonzeros} nonzeros"));
            }
        }
    }
    // displayed patterns: n = 2 and n = 3 label matrices
    let spec2 = draw_spec(&mut rng, 2);
    let m2 = build_lambda_matrix(&spec2).unwrap();
    let pat2: [[i8; 4]; 4] = [[9, 2, 1, 0], [2, 9, 0, 1], [1, 0, 9, 2], [0, 1, 2, 9]];
    check_pattern(
        &spec2,
        &m2,
        &pat2.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        &mut failures,
    );
    let spec3 = draw_spec(&mut rng, 3);
    let m3 = build_lambda_matrix(&spec3).unwrap();
    let pat3: [[i8; 8]; 8] = [
        [9, 3, 2, 0, 1, 0, 0, 0],
        [3, 9, 0, 2, 0, 1, 0, 0],
        [2, 0, 9, 3, 0, 0, 1, 0],
        [0, 2, 3, 9, 0, 0, 0, 1],
        [1, 0, 0, 0, 9, 3, 2, 0],
        [0, 1, 0, 0, 3, 9, 0, 2],
        [0, 0, 1, 0, 2, 0, 9, 3],
        [0, 0, 0, 1, 0, 2, 3, 9],
    ];
    check_pattern(
        &spec3,
        &m3,
        &pat3.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        &mut failures,
    );

    let passed = failures.is_empty();
    result(
        5,
        "coupling-matrix structure for n <= 8",
        false,
        start,
        passed,
        if passed {
            "symmetry, zero row sums, n+1 nonzeros, display patterns".into()
        } else {
            failures.join("; ")
        },
    )
}

fn check_pattern(
    spec: &ModelSpec,
    m: &crate::operator_algebra::OperatorMatrix,
    pattern: &[Vec<i8>],
    failures: &mut Vec<String>,
) {
    use num_rational::BigRational;
    let lam = crate::model::lambda_total_exact(spec);
    for (r, row) in pattern.iter().enumerate() {
        for (c, &label) in row.iter().enumerate() {
            let got = m.at(r, c).coeff(0, 0);
            let want = match label {
                0 => BigRational::from_integer(0.into()),
                9 => lam.clone(),
                k => -spec.params(k as usize - 1).rate_exact().clone(),
            };
            if got != want {
                failures.push(format!("n={} pattern mismatch at ({r},{c})", spec.n()));
            }
        }
    }
}

/// 6. Symbol-root certificate for n in {1, 2, 3}, 50 random (alpha, params).
fn symbol_root_certificate() -> CriterionResult {
    let start = Instant::now();
    let mut rng = seeded(6);
    let mut worst = 0.0f64;
    let mut all_passed = true;
    for n in [1usize, 2, 3] {
        for _ in 0..50 {
            let spec = draw_spec(&mut rng, n);
            let alpha = rng.random_range(-6.0..6.0);
            let report = symbol_root_check(&spec, &[alpha]).unwrap();
            worst = worst.max(report.max_residual);
            all_passed &= report.passed;
        }
    }
    result(
        6,
        "symbol-root certificate",
        false,
        start,
        all_passed && worst < 1e-8,
        format!("max normalized residual {worst:.3e} (tolerance 1e-8)"),
    )
}

/// 7. Direction-state system integrates to the product CF for n in
///    {1, 2, 3}, t in {0.5, 1, 2}, alpha in {0.5, 1, 2}.
fn system_certificate() -> CriterionResult {
    let start = Instant::now();
    let mut rng = seeded(7);
    let mut worst = 0.0f64;
    let mut all_passed = true;
    for n in [1usize, 2, 3] {
        let spec = draw_spec(&mut rng, n);
        for &t in &[0.5, 1.0, 2.0] {
            let report = system_cf_check(&spec, &[0.5, 1.0, 2.0], t).unwrap();
            worst = worst.max(report.max_residual);
            all_passed &= report.passed;
        }
    }
    result(
        7,
        "direction-state system vs product CF",
        false,
        start,
        all_passed && worst < 1e-8,
        format!("max residual {worst:.3e} (tolerance 1e-8)"),
    )
}

/// 8. CF-derivative initial conditions, orders 0..3, 10 draws, both signs.
fn initial_conditions() -> CriterionResult {
    let start = Instant::now();
    let mut rng = seeded(8);
    let mut worst = 0.0f64;
    let mut all_passed = true;
    for _ in 0..10 {
        let p1 = draw_params(&mut rng);
        let p2 = draw_params(&mut rng);
        for sign in [PairSign::Sum, PairSign::Difference] {
            let report = initial_condition_check(&p1, &p2, sign).unwrap();
            worst = worst.max(report.max_residual);
            all_passed &= report.passed;
        }
    }
    result(
        8,
        "CF-derivative initial conditions",
        false,
        start,
        all_passed && worst < 1e-10,
        format!("max relative residual {worst:.3e} (tolerance 1e-10)"),
    )
}

/// 9. Empirical atom masses within 4 sigma at N = 10^6 for the generic
///    and symmetric two-component specs.
fn singular_masses() -> CriterionResult {
    let start = Instant::now();
    let n_draws = 1_000_000usize;
    let specs = [
        (
            "generic",
            ModelSpec::from_str_parts(&[("1", "3", "1/2", "1"), ("2", "5", "-1", "1")]),
        ),
        (
            "symmetric",
            ModelSpec::from_str_parts(&[("1", "1", "0", "1"), ("1", "1", "0", "1")]),
        ),
    ];
    let mut failures = Vec::new();
    let mut worst_z = 0.0f64;
    for (tag, spec) in &specs {
        let spec = spec.as_ref().unwrap();
        let t = 1.0;
        let samples = sample_linear_form(spec, t, n_draws, 0x3A5E11).unwrap();
        let atoms = singular_atoms(spec, t).unwrap();
        let estimates = empirical_atom_masses(&samples, &atoms).unwrap();
        let mut total_fraction = 0.0;
        for e in &estimates {
            let sigma = (e.expected_mass * (1.0 - e.expected_mass) / n_draws as f64).sqrt();
            let z = (e.fraction - e.expected_mass).abs() / sigma;
            worst_z = worst_z.max(z);
            if z >= 4.0 {
                failures.push(format!("{tag} atom at {}: z = {z:.2}", e.location));
            }
            total_fraction += e.fraction;
        }
        let total_expected = (-lambda_total(spec) * t).exp();
        let sigma = (total_expected * (1.0 - total_expected) / n_draws as f64).sqrt();
        let z = (total_fraction - total_expected).abs() / sigma;
        worst_z = worst_z.max(z);
        if z >= 4.0 {
            failures.push(format!("{tag} total: z = {z:.2}"));
        }
    }
    let passed = failures.is_empty();
    result(
        9,
        "empirical singular masses",
        false,
        start,
        passed,
        if passed {
            format!("worst |z| = {worst_z:.2} over atoms and totals (limit 4)")
        } else {
            failures.join("; ")
        },
    )
}

/// 10. Empirical CF within 5/sqrt(N) of the product formula on a
///     32-point frequency grid for three specs.
fn cf_agreement() -> CriterionResult {
    let start = Instant::now();
    let n_draws = 100_000usize;
    let bound = 5.0 / (n_draws as f64).sqrt();
    let specs = [
        ModelSpec::from_str_parts(&[("1", "3", "1/2", "1"), ("2", "5", "-1", "1")]),
        ModelSpec::from_str_parts(&[("1", "1", "0", "1"), ("1", "1", "0", "1")]),
        ModelSpec::from_str_parts(&[
            ("1", "2", "0", "1"),
            ("1/2", "3", "1", "-1"),
            ("3", "1/4", "-2", "2"),
        ]),
    ];
    let mut worst = 0.0f64;
    let mut passed = true;
    for (i, spec) in specs.iter().enumerate() {
        let spec = spec.as_ref().unwrap();
        let t = 1.0;
        let samples = sample_linear_form(spec, t, n_draws, 0xCF00 + i as u64).unwrap();
        for j in 0..32 {
            let alpha = -8.0 + 16.0 * j as f64 / 31.0;
            let diff = (empirical_char_fn(&samples, alpha) - char_fn_l(spec, alpha, t)).norm();
            worst = worst.max(diff);
            passed &= diff <= bound;
        }
    }
    result(
        10,
        "empirical CF agreement",
        false,
        start,
        passed,
        format!("max |emp - exact| = {worst:.3e} (bound {bound:.3e})"),
    )
}

/// 11. Mass bookkeeping: quadrature of the single-process density and
///     the FFT-inverted grid mass, both to 1e-6.
fn mass_bookkeeping() -> CriterionResult {
    let start = Instant::now();
    let p = TelegraphParams::from_f64(1.0, 1.0, 0.0).unwrap();
    let quad = integrate(
        |x| telegraph::density_ac(&p, x, 1.0).unwrap(),
        -1.0,
        1.0,
        1e-9,
    );
    let single_err = (quad - (1.0 - (-1.0f64).exp())).abs();

    let spec = ModelSpec::from_str_parts(&[("1", "1", "0", "1"), ("1", "1", "0", "1")]).unwrap();
    let grid = ac_density(&spec, 1.0, 1.25, 4096).unwrap();
    let fft_err = (grid.ac_mass - (1.0 - (-2.0f64).exp())).abs();

    let passed = single_err < 1e-6 && fft_err < 1e-6;
    result(
        11,
        "mass bookkeeping",
        false,
        start,
        passed,
        format!("quadrature error {single_err:.2e}, grid error {fft_err:.2e} (tolerance 1e-6)"),
    )
}

/// 12. KS distance of AC-conditioned draws against the FFT-inverted CDF.
fn distributional_fit() -> CriterionResult {
    let start = Instant::now();
    let spec = ModelSpec::from_str_parts(&[("1", "1", "0", "1"), ("1", "1", "0", "1")]).unwrap();
    let t = 1.0;
    let n_draws = 100_000usize;
    let samples = sample_linear_form(&spec, t, n_draws, 0xD15F).unwrap();
    let cdf = Cdf::build(&spec, t, 1.25, 4096).unwrap();
    let d = ks_statistic(&samples, |x| cdf.ac_conditional(x), KsCondition::AcOnly);
    let threshold = 1.95 / (n_draws as f64).sqrt() + cdf.dx();
    result(
        12,
        "distributional fit of AC draws",
        false,
        start,
        d < threshold,
        format!("KS = {d:.4e} (threshold {threshold:.4e})"),
    )
}

/// 13. Kac scaling: KS to the limiting Gaussian at M = 100 below 0.01
///     and non-increasing across M in {1, 10, 100} within 20% slack.
fn kac_limit() -> CriterionResult {
    let start = Instant::now();
    let template =
        ModelSpec::from_str_parts(&[("1", "1", "0", "1"), ("1", "1", "0", "1")]).unwrap();
    let rows = kac_convergence(
        &template,
        &[1.0, 1.0],
        &[1.0, 10.0, 100.0],
        1.0,
        100_000,
        0x6AC,
    )
    .unwrap();
    let final_ks = rows[2].ks_distance;
    let mut monotone = true;
    for w in rows.windows(2) {
        if w[1].ks_distance > 1.2 * w[0].ks_distance {
            monotone = false;
        }
    }
    let passed = final_ks < 0.01 && monotone;
    let seq: Vec<String> = rows
        .iter()
        .map(|r| format!("M={}: {:.4}", r.scale, r.ks_distance))
        .collect();
    result(
        13,
        "Kac diffusion limit",
        false,
        start,
        passed,
        format!(
            "{} (limit 0.01 at M=100, non-increasing within 20%)",
            seq.join(", ")
        ),
    )
}

/// 14. Advisory: finite-difference residual reduction >= 2.8x per 2x
///     refinement on the smooth interior, n = 1 and the symmetric n = 2
///     spec.
fn fd_advisory() -> CriterionResult {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut all_ok = true;
    let single = ModelSpec::from_str_parts(&[("1", "1", "0", "1")]).unwrap();
    let report1 = fd_residual(
        &single,
        (0.8, 1.2),
        &FdGridSpec {
            nt: 8,
            nx: 32,
            refinements: 2,
        },
    )
    .unwrap();
    lines.push(format!(
        "n=1: {:?} (shortfall {:.2})",
        report1.status, report1.max_residual
    ));
    all_ok &= report1.status != CheckStatus::Failed;

    let symmetric =
        ModelSpec::from_str_parts(&[("1", "1", "0", "1"), ("1", "1", "0", "1")]).unwrap();
    let report2 = fd_residual(
        &symmetric,
        (0.8, 1.2),
        &FdGridSpec {
            nt: 8,
            nx: 32,
            refinements: 2,
        },
    )
    .unwrap();
    lines.push(format!(
        "n=2: {:?} (shortfall {:.2})",
        report2.status, report2.max_residual
    ));
    all_ok &= report2.status != CheckStatus::Failed;

    result(
        14,
        "finite-difference residual (advisory)",
        true,
        start,
        all_ok,
        lines.join("; "),
    )
}

pub fn run_criterion(id: usize) -> CriterionResult {
    match id {
        1 => closed_form_identity(),
        2 => symmetric_factorization(),
        3 => telegraph_heat_identity(),
        4 => determinant_oracle(),
        5 => lambda_structure(),
        6 => symbol_root_certificate(),
        7 => system_certificate(),
        8 => initial_conditions(),
        9 => singular_masses(),
        10 => cf_agreement(),
        11 => mass_bookkeeping(),
        12 => distributional_fit(),
        13 => kac_limit(),
        14 => fd_advisory(),
        _ => panic!("unknown criterion {id}"),
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=CRITERIA_COUNT).map(run_criterion).collect()
}
