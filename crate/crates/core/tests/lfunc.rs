mod common;

use num_complex::Complex64;
use yoshida_core::arith::{kronecker, Cyclo};
use yoshida_core::classfield::{characters, class_group, ClassCharacter, ClassGroup};
use yoshida_core::lfunc::{rankin_coeffs, rankin_ldata, rankin_shape, AfeEngine, AfeParams, Cosine, LData, Plain};
use yoshida_core::quaternion::qexp;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pow(x: f64, e: Complex64) -> Complex64 {
    (e * x.ln()).exp()
}

/// ζ(s, a) by Euler–Maclaurin summation with N terms and Bernoulli corrections through B₁₆.
fn hurwitz_zeta(s: Complex64, a: f64) -> Complex64 {
    const B: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];
    let n = 40;
    let mut sum: Complex64 = (0..n).map(|k| pow(k as f64 + a, -s)).sum();
    let x = n as f64 + a;
    sum += pow(x, c(1.0, 0.0) - s) / (s - 1.0) + 0.5 * pow(x, -s);
    // term k: B_{2k}/(2k)! · s(s+1)…(s+2k−2) · x^{−s−2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in B.iter().enumerate() {
        let k = k + 1;
        sum += b / fact * rising * pow(x, -s - (2 * k - 1) as f64);
        rising *= (s + (2 * k - 1) as f64) * (s + (2 * k) as f64);
        fact *= ((2 * k + 1) * (2 * k + 2)) as f64;
    }
    sum
}

/// L(s, χ_D) = |D|^{−s} Σ_a χ(a) ζ(s, a/|D|).
fn dirichlet_oracle(disc: i64, s: Complex64) -> Complex64 {
    let m = disc.unsigned_abs();
    let scale = pow(m as f64, -s);
    (1..m).map(|a| kronecker(disc, a) as f64 * hurwitz_zeta(s, a as f64 / m as f64)).sum::<Complex64>() * scale
}

#[test]
fn quadratic_l_values_match_hurwitz_zeta() {
    let params = AfeParams { tol: 1e-11, ..AfeParams::default() };
    let engine = AfeEngine::new(params);
    for disc in [-4i64, -23, -3, 5] {
        let l = LData::kronecker(disc, 20_000);
        for s in [c(0.5, 0.0), c(0.7, 0.4), c(0.5, 3.0)] {
            let v = engine.eval(&l, s).unwrap();
            let expect = dirichlet_oracle(disc, s);
            assert!((v.value() - expect).norm() < 1e-8, "D={disc} s={s}: {} vs {expect}", v.value());
            assert!(v.error_bound < 1e-9);
        }
    }
}

/// r_χ(n) = Σ_c χ(c) #{(x, y) : Q_c(x, y) = n} / w, by direct enumeration.
fn theta_oracle(g: &ClassGroup, chi: &ClassCharacter, nmax: usize) -> Vec<Cyclo> {
    let w = g.disc.unit_count() as i64;
    let mut out = vec![Cyclo::zero(chi.h); nmax + 1];
    for (ci, f) in g.elements.iter().enumerate() {
        let mut counts = vec![0i64; nmax + 1];
        let r = (4 * nmax as i64).isqrt() + 2;
        for x in -r..=r {
            for y in -r..=r {
                let v = f.eval(x, y);
                if v > 0 && v as usize <= nmax {
                    counts[v as usize] += 1;
                }
            }
        }
        for n in 1..=nmax {
            if counts[n] != 0 {
                out[n] = &out[n] + &chi.eval(ci).scale(&yoshida_core::arith::q(counts[n], w));
            }
        }
    }
    out
}

/// Σ_{m² l = n, (m, N) = 1} χ_{−d}(m) m^{w−1} a(l) r_χ(l).
fn convolution_oracle(af: &[i128], weight: u32, level: u64, d: u64, r: &[Cyclo], nmax: usize) -> Vec<Cyclo> {
    let mut out = vec![Cyclo::zero(r[1].order()); nmax + 1];
    for m in (1..=nmax).take_while(|m| m * m <= nmax) {
        let k = kronecker(-(d as i64), m as u64) as i128;
        if k == 0 || num_integer::gcd(m as u64, level) != 1 {
            continue;
        }
        for l in 1..=nmax / (m * m) {
            let coef = k * (m as i128).pow(weight - 1) * af[l];
            out[m * m * l] = &out[m * m * l] + &r[l].scale(&yoshida_core::arith::q128(coef));
        }
    }
    out
}

#[test]
fn euler_product_agrees_with_convolution() {
    let fl = common::flagship();
    let nmax = 300;
    for (system, form) in [(&fl.g_system, &fl.g), (&fl.f_system, &fl.f)] {
        let af = qexp::coefficients(&system.order, form, nmax as u64).unwrap();
        for d in [23u64, 47, 15] {
            let g = class_group(d, false).unwrap();
            for chi in characters(&g) {
                let r = theta_oracle(&g, &chi, nmax);
                let expect = convolution_oracle(&af, form.weight(), 19, d, &r, nmax);
                let got = rankin_coeffs(&af, form.weight(), 19, &g, &chi, nmax).unwrap();
                assert_eq!(&got[1..], &expect[1..], "weight {} d={d} chi={:?}", form.weight(), chi.values);
                let ld = rankin_ldata(&af, form.weight(), 19, &g, &chi, nmax).unwrap();
                let half = (form.weight() as f64 - 1.0) / 2.0;
                for n in 1..=nmax {
                    let z = got[n].to_complex() / (n as f64).powf(half);
                    assert!((ld.coeffs[n] - z).norm() <= 1e-12 * z.norm().max(1.0), "n={n}");
                }
            }
        }
    }
}

/// The flagship L(s, f × θ_χ) at d = 23 with enough coefficients for every check below.
fn flagship_ldata(chi_index: usize, engine: &AfeEngine, extra: &[Complex64]) -> (LData, usize) {
    let fl = common::flagship();
    let shape = rankin_shape(6, 19, 23).unwrap();
    let mut need = engine.terms_needed(&shape, c(0.5, 0.0)).unwrap();
    for &s in extra {
        need = need.max(engine.required_terms(&shape, s, &Plain)).max(engine.required_terms(&shape, s, &Cosine::default()));
    }
    let nmax = 2 * need;
    let af = qexp::coefficients(&fl.f_system.order, &fl.f, nmax as u64).unwrap();
    let g = class_group(23, false).unwrap();
    let chi = &characters(&g)[chi_index];
    (rankin_ldata(&af, 6, 19, &g, chi, nmax).unwrap(), need)
}

#[test]
fn flagship_functional_equation_and_stability() {
    let engine = AfeEngine::new(AfeParams { tol: 1e-10, ..AfeParams::default() });
    let test_points = [c(0.6, 0.0), c(0.5, 0.3)];
    let (l, _) = flagship_ldata(1, &engine, &test_points);
    let (sign, _) = engine.solve_sign(&l).unwrap();
    assert!(sign == c(1.0, 0.0) || sign == c(-1.0, 0.0), "{sign}");
    for s in test_points {
        let r = engine.fe_residual(&l, s, sign).unwrap();
        assert!(r < 1e-8, "residual {r} at {s}");
    }
    // a wrong sign is detected
    assert!(engine.fe_residual(&l, test_points[0], -sign).unwrap() > 1e-4);

    let base = engine.eval(&l, c(0.5, 0.0)).unwrap();
    let doubled = AfeEngine::new(AfeParams { terms: Some(2 * base.terms), tol: 1e-10, ..AfeParams::default() });
    let wide = doubled.eval(&l, c(0.5, 0.0)).unwrap();
    assert!((base.value() - wide.value()).norm() <= base.error_bound + wide.error_bound);
}

#[test]
fn conjugate_characters_give_conjugate_values() {
    let engine = AfeEngine::new(AfeParams { tol: 1e-10, ..AfeParams::default() });
    let s = c(0.5, 0.3);
    let (l1, _) = flagship_ldata(1, &engine, &[s, s.conj()]);
    let (l2, _) = flagship_ldata(2, &engine, &[s, s.conj()]);
    let a = engine.eval(&l1, s).unwrap();
    let b = engine.eval(&l2, s.conj()).unwrap();
    assert!((a.value() - b.value().conj()).norm() <= a.error_bound + b.error_bound);
    let a0 = engine.eval(&l1, c(0.5, 0.0)).unwrap();
    let b0 = engine.eval(&l2, c(0.5, 0.0)).unwrap();
    assert!((a0.value() - b0.value()).norm() <= a0.error_bound + b0.error_bound);
    assert!(a0.value().im.abs() <= a0.error_bound + 1e-12);
}

#[test]
fn unreachable_precision_is_reported() {
    let l = LData::kronecker(-23, 10);
    let r = AfeEngine::new(AfeParams::default()).eval(&l, c(0.5, 0.0));
    assert!(matches!(r, Err(yoshida_core::Error::PrecisionUnreachable { .. })));
}
