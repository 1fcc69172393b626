//! One test per acceptance criterion. Each prints its report line.

use murmurations::verify::{self, CriterionReport};

fn gate(report: CriterionReport) {
    println!("{report}");
    assert!(report.passed, "{report}");
}

#[test]
fn c1_fundamental_discriminant_count() {
    gate(verify::c1());
}

#[test]
fn c2_explicit_formula_closure() {
    gate(verify::c2());
}

#[test]
fn c3_zero_finder_sanity() {
    gate(verify::c3());
}

#[test]
fn c4_l_value_oracles() {
    gate(verify::c4());
}

#[test]
fn c5_frobenius_traces() {
    gate(verify::c5());
}

#[test]
fn c6_zero_pair_identity() {
    gate(verify::c6());
}

#[test]
fn c7_structure_ordering() {
    gate(verify::c7());
}

#[test]
fn c8_prime_square_jumps() {
    gate(verify::c8());
}

#[test]
fn c9_cli_reproducible() {
    gate(verify::c9());
}

#[test]
fn c10_linearity_and_consistency() {
    gate(verify::c10());
}
