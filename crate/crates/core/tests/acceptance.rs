//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line. Advisory criteria report but do not gate the suite.

use telegraph_forms::selftest::{run_criterion, CriterionResult};

fn check(id: usize) {
    let result: CriterionResult = run_criterion(id);
    println!("{}", result.line());
    assert!(
        result.passed || result.advisory,
        "criterion {id} failed: {}",
        result.detail
    );
}

#[test]
fn c01_operator_identity_for_sum_and_difference() {
    check(1);
}

#[test]
fn c02_symmetric_case_factorization() {
    check(2);
}

#[test]
fn c03_telegraph_plus_heat_factored_form() {
    check(3);
}

#[test]
fn c04_schur_vs_cofactor_determinants() {
    check(4);
}

#[test]
fn c05_coupling_matrix_structure() {
    check(5);
}

#[test]
fn c06_symbol_root_certificate() {
    check(6);
}

#[test]
fn c07_system_vs_product_cf() {
    check(7);
}

#[test]
fn c08_cf_derivative_initial_conditions() {
    check(8);
}

#[test]
fn c09_empirical_singular_masses() {
    check(9);
}

#[test]
fn c10_empirical_cf_agreement() {
    check(10);
}

#[test]
fn c11_mass_bookkeeping() {
    check(11);
}

#[test]
fn c12_distributional_fit() {
    check(12);
}

#[test]
fn c13_kac_diffusion_limit() {
    check(13);
}

#[test]
fn c14_fd_residual_advisory() {
    let result = run_criterion(14);
    println!("{}", result.line());
    // advisory: inconclusive outcomes are reported but never fail
    assert!(result.advisory);
}
