mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yoshida_core::arith::qi;
use yoshida_core::quaternion::eigen::newforms;
use yoshida_core::siegel::{
    build_yoshida, calibrate_shift, reduce_t, u_p, u_p_on, CoeffSource, EulerCheck, HalfIntMat, SiegelCoeffTable, YoshidaLift,
};
use yoshida_core::Error;

fn random_unimodular(rng: &mut ChaCha8Rng) -> [[i64; 2]; 2] {
    // a short random word in the generators of GL2(Z)
    let gens = [[[1, 1], [0, 1]], [[1, -1], [0, 1]], [[0, 1], [1, 0]], [[1, 0], [1, 1]], [[-1, 0], [0, 1]]];
    let mut m = [[1i64, 0], [0, 1]];
    for _ in 0..rng.gen_range(1..5) {
        let g = gens[rng.gen_range(0..gens.len())];
        m = [
            [m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]],
            [m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]],
        ];
    }
    m
}

#[test]
fn flagship_table_is_nonzero_and_invariant() {
    let fl = common::flagship();
    let lift = YoshidaLift::new(&fl.f, &fl.g, fl.m1).unwrap();
    let table = lift.table(120);
    assert!(!table.is_zero());
    assert_eq!(table.weight, 4);
    let keys: Vec<HalfIntMat> = table.coeffs.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let t = keys[rng.gen_range(0..keys.len())];
        let a = random_unimodular(&mut rng);
        let moved = t.transform(&a);
        assert_eq!(lift.coeff(&moved).unwrap(), table.coeffs[&t], "T = {t}, A = {a:?}");
        assert_eq!(reduce_t(&moved).unwrap().0, t);
    }
}

#[test]
fn u_p_relation_at_the_level() {
    let fl = common::flagship();
    let lift = YoshidaLift::new(&fl.f, &fl.g, fl.m1).unwrap();
    // at bound 400 no 19T is in range, so the table check needs 19²·4 ≤ bound (a(F, T) vanishes at disc 3)
    assert!(matches!(u_p(&lift.table(400), 19), Err(Error::InsufficientDepth(19))));
    let table = lift.table(1500);
    assert_eq!(u_p(&table, 19).unwrap(), qi(361));
    let tests: Vec<HalfIntMat> = table.coeffs.keys().filter(|t| t.abs_disc() <= 40).copied().collect();
    assert_eq!(u_p_on(&lift, 19, &tests).unwrap(), qi(361));
}

#[test]
fn euler_factor_matches_after_calibration() {
    let fl = common::flagship();
    let lift = YoshidaLift::new(&fl.f, &fl.g, fl.m1).unwrap();
    let table = lift.table(60);
    let tests: Vec<HalfIntMat> = table.nonzero().map(|(t, _)| *t).take(2).collect();
    assert_eq!(calibrate_shift(&lift, &fl.f, &fl.g, 2, &tests).unwrap(), Some(2));
    for q in [3u64, 5] {
        let c = EulerCheck::run(&lift, &fl.f, &fl.g, q, 2, &tests).unwrap();
        assert!(c.matches, "{c:?}");
    }
}

#[test]
fn mismatched_atkin_lehner_signs_are_rejected() {
    let (_, fs) = newforms(6, 11, 13).unwrap();
    let (_, gs) = newforms(2, 11, 13).unwrap();
    assert_ne!(fs[0].al_signs, gs[0].al_signs);
    assert!(matches!(build_yoshida(&fs[0], &gs[0], 11, 60), Err(Error::AtkinLehnerMismatch(11))));
}

#[test]
fn builds_are_deterministic_and_round_trip() {
    let fl = common::flagship();
    let a = build_yoshida(&fl.f, &fl.g, fl.m1, 200).unwrap();
    let b = build_yoshida(&fl.f, &fl.g, fl.m1, 200).unwrap();
    assert_eq!(a.to_ycf(), b.to_ycf());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ycf");
    a.write_ycf(&path).unwrap();
    assert_eq!(SiegelCoeffTable::read_ycf(&path).unwrap(), a);
}

#[test]
fn table_lookup_checks_depth() {
    let fl = common::flagship();
    let t = build_yoshida(&fl.f, &fl.g, fl.m1, 100).unwrap();
    let far = HalfIntMat::new(30, 1, 30).unwrap();
    assert!(matches!(t.get(&far), Err(Error::DepthExceeded { .. })));
    assert!(matches!(HalfIntMat::new(1, 3, 1), Err(Error::NotPositiveDefinite(_))));
}
