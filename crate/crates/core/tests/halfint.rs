mod common;

use num_traits::Zero;
use proptest::prelude::*;
use yoshida_core::arith::{q, qi};
use yoshida_core::halfint::{extract_h, extract_h_from_table, fundamental_scan, mu_residues, support_ok};
use yoshida_core::siegel::{build_yoshida, fourier_jacobi, prime_anchor, reduce_t, SiegelCoeffTable};

fn flagship_table() -> SiegelCoeffTable {
    let fl = common::flagship();
    build_yoshida(&fl.f, &fl.g, fl.m1, 400).unwrap()
}

#[test]
fn anchor_and_doubling_identity() {
    let table = flagship_table();
    let (p, t) = prime_anchor(&table, 50).unwrap();
    assert_eq!(t.c, p as i64);
    assert!(!table.get(&t).unwrap().is_zero());
    let h = extract_h(&fourier_jacobi(&table, p as i64).unwrap(), 400).unwrap();
    assert_eq!(h.coeff(t.abs_disc()), table.get(&t).unwrap() * qi(2));
}

#[test]
fn slice_and_table_give_the_same_series() {
    let table = flagship_table();
    let (p, _) = prime_anchor(&table, 50).unwrap();
    let from_slice = extract_h(&fourier_jacobi(&table, p as i64).unwrap(), 400).unwrap();
    let direct = extract_h_from_table(&table, p, 400).unwrap();
    assert_eq!(from_slice, direct);
    assert!(support_ok(&from_slice));
    assert_eq!(from_slice.weight_num, 7);
    assert_eq!(from_slice.level, 4 * p * 19);
}

#[test]
fn scan_finds_witnessed_discriminants() {
    let table = flagship_table();
    let (p, _) = prime_anchor(&table, 50).unwrap();
    let h = extract_h(&fourier_jacobi(&table, p as i64).unwrap(), 400).unwrap();
    let scan = fundamental_scan(&h, &table, 200).unwrap();
    assert!(!scan.hits.is_empty());
    for d in &scan.hits {
        let w = &scan.witness[d];
        assert_eq!(reduce_t(&w.matrix).unwrap().0.abs_disc(), *d);
        assert_eq!(table.get(&w.matrix).unwrap(), w.value);
        assert!(!w.value.is_zero());
    }
}

#[test]
fn series_scales_with_the_table() {
    let table = flagship_table();
    let (p, _) = prime_anchor(&table, 50).unwrap();
    let s = q(-3, 7);
    let a = extract_h_from_table(&table.scaled(&s), p, 150).unwrap();
    let b = extract_h_from_table(&table, p, 150).unwrap().scaled(&s);
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn residues_are_exactly_the_square_roots(m in 1i64..2000, pi in 0usize..6) {
        let p = [2i64, 3, 5, 7, 11, 13][pi];
        let brute: Vec<i64> = (0..2 * p).filter(|mu| (mu * mu + m) % (4 * p) == 0).collect();
        prop_assert_eq!(mu_residues(m, p), brute);
    }
}
