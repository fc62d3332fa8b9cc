//! Hecke operators on Fourier coefficients: U(p) for p | N and T(m) for m prime to N.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::{CoeffSource, HalfIntMat, SiegelCoeffTable};
use crate::arith::{divisors, is_prime, qi, Q};
use crate::error::{Error, Result};
use crate::quaternion::eigen::EigenSystem;

/// The U(p) eigenvalue λ with a(F, pT) = λ a(F, T), checked on every T whose multiple pT is in range.
pub fn u_p(table: &SiegelCoeffTable, p: u64) -> Result<Q> {
    let pi = p as i64;
    let tests: Vec<HalfIntMat> = table
        .coeffs
        .keys()
        .filter(|t| t.abs_disc() * pi * pi <= table.disc_bound)
        .copied()
        .collect();
    u_p_on(table, p, &tests)
}

/// The U(p) relation on an explicit list of matrices, for sources without a depth limit.
pub fn u_p_on(src: &dyn CoeffSource, p: u64, tests: &[HalfIntMat]) -> Result<Q> {
    if src.level() % p != 0 || !is_prime(p) {
        return Err(Error::Unsupported(format!("U({p}) needs a prime dividing the level {}", src.level())));
    }
    let pi = p as i64;
    let pairs: Vec<(Q, Q)> = tests
        .iter()
        .map(|t| Ok((src.coeff(t)?, src.coeff(&t.scale(pi))?)))
        .collect::<Result<_>>()?;
    let lambda = pairs
        .iter()
        .find(|(v, _)| !v.is_zero())
        .map(|(v, w)| w / v)
        .ok_or(Error::InsufficientDepth(p))?;
    for (v, w) in &pairs {
        if &(&lambda * v) != w {
            return Err(Error::NotEigen(p, format!("a(pT) = {w} but λ a(T) = {}", &lambda * v)));
        }
    }
    Ok(lambda)
}

/// Strip factors p | N from T using a(F, pT) = λ_p a(F, T). Returns the reduced matrix and the
/// coefficient it must carry; only primes with λ_p ≠ 0 are divided out.
pub fn lemma21_divide(t: &HalfIntMat, value: &Q, lambdas: &BTreeMap<u64, Q>) -> (HalfIntMat, Q) {
    let mut t = *t;
    let mut v = value.clone();
    loop {
        let step = lambdas
            .iter()
            .find(|(p, l)| !l.is_zero() && t.content() % **p as i64 == 0);
        match step {
            Some((p, l)) => {
                let pi = *p as i64;
                t = HalfIntMat { a: t.a / pi, b: t.b / pi, c: t.c / pi };
                v = &v / l;
            }
            None => return (t, v),
        }
    }
}

/// a(T(m)F, S), from the coset decomposition of the similitudes of multiplier m into
/// upper triangular blocks (A, B; 0, D) with AᵀD = m.
pub fn hecke_image(src: &dyn CoeffSource, m: u64, s: &HalfIntMat) -> Result<Q> {
    let kappa = src.weight() as i32;
    let mi = m as i64;
    let mut total = Q::zero();
    let mq = qi(mi);
    for a in divisors(m).into_iter().map(|x| x as i64) {
        for d in divisors(m).into_iter().map(|x| x as i64) {
            for b in 0..d {
                if (mi * b) % (a * d) != 0 {
                    continue;
                }
                // D S Dᵀ for D = (a, b; 0, d), written as (A, B, C) with B the doubled off-diagonal
                let big_a = s.a * a * a + s.b * a * b + s.c * b * b;
                let big_b = s.b * a * d + 2 * s.c * b * d;
                let big_c = s.c * d * d;
                if big_a % mi != 0 || big_b % mi != 0 || big_c % mi != 0 {
                    continue;
                }
                let td = HalfIntMat { a: big_a / mi, b: big_b / mi, c: big_c / mi };
                // the symmetric X = Y/m with XD integral form a finite group; the character
                // X ↦ e(tr(T_D X)) sums to its order when trivial and to zero otherwise
                let mut order = 0i64;
                let mut trivial = true;
                for y11 in 0..mi {
                    if (y11 * a) % mi != 0 {
                        continue;
                    }
                    for y12 in 0..mi {
                        if (y12 * a) % mi != 0 || (y11 * b + y12 * d) % mi != 0 {
                            continue;
                        }
                        for y22 in 0..mi {
                            if (y12 * b + y22 * d) % mi != 0 {
                                continue;
                            }
                            order += 1;
                            if (td.a * y11 + td.b * y12 + td.c * y22) % mi != 0 {
                                trivial = false;
                            }
                        }
                    }
                }
                if !trivial {
                    continue;
                }
                let coeff = src.coeff(&td)?;
                if coeff.is_zero() {
                    continue;
                }
                let w = mq.pow(2 * kappa - 3) * qi(order) / qi(a * d).pow(kappa);
                total += w * coeff;
            }
        }
    }
    Ok(total)
}

/// The T(m) eigenvalue, required to be consistent on every test matrix.
pub fn hecke_eigenvalue(src: &dyn CoeffSource, m: u64, tests: &[HalfIntMat]) -> Result<Q> {
    let mut lambda: Option<Q> = None;
    let mut checked = Vec::new();
    for s in tests {
        let a = src.coeff(s)?;
        let img = hecke_image(src, m, s)?;
        if lambda.is_none() && !a.is_zero() {
            lambda = Some(&img / &a);
        }
        checked.push((a, img, *s));
    }
    let lambda = lambda.ok_or(Error::InsufficientDepth(m))?;
    for (a, img, s) in checked {
        if &lambda * &a != img {
            return Err(Error::NotEigen(m, format!("T({m}) at {s}: image {img}, expected {}", &lambda * &a)));
        }
    }
    Ok(lambda)
}

/// (λ(q), λ(q²)) for a prime q not dividing the level.
pub fn hecke_tq(src: &dyn CoeffSource, q: u64, tests: &[HalfIntMat]) -> Result<(Q, Q)> {
    if !is_prime(q) || src.level() % q == 0 {
        return Err(Error::Unsupported(format!("T({q}) needs a prime not dividing {}", src.level())));
    }
    Ok((hecke_eigenvalue(src, q, tests)?, hecke_eigenvalue(src, q * q, tests)?))
}

/// Spin Euler factor 1 − λ(q)X + (λ(q)² − λ(q²) − q^{2κ−4})X² − λ(q)q^{2κ−3}X³ + q^{4κ−6}X⁴,
/// coefficients of X⁰..X⁴.
pub fn spin_factor(q: u64, kappa: u32, l1: &Q, l2: &Q) -> Vec<Q> {
    let qq = qi(q as i64);
    let k = kappa as i32;
    vec![
        Q::one(),
        -l1.clone(),
        l1 * l1 - l2 - qq.pow(2 * k - 4),
        -(l1 * qq.pow(2 * k - 3)),
        qq.pow(4 * k - 6),
    ]
}

fn poly_mul(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// (1 − a_f X + q^{w_f−1}X²)(1 − q^{s0} a_g X + q^{2s0+1}X²).
pub fn euler_factor_pair(q: u64, f: &EigenSystem, g: &EigenSystem, s0: u32) -> Result<Vec<Q>> {
    let af = f.hecke.get(&q).ok_or(Error::InsufficientDepth(q))?;
    let ag = g.hecke.get(&q).ok_or(Error::InsufficientDepth(q))?;
    let qq = qi(q as i64);
    let s = s0 as i32;
    let ff = vec![Q::one(), -af.clone(), qq.pow(f.weight() as i32 - 1)];
    let gg = vec![Q::one(), -(ag * qq.pow(s)), qq.pow(2 * s + 1)];
    Ok(poly_mul(&ff, &gg))
}

/// One Euler-factor comparison at a good prime.
#[derive(Clone, Debug, Serialize)]
pub struct EulerCheck {
    pub q: u64,
    pub shift: u32,
    pub lambda_q: String,
    pub lambda_q2: String,
    pub spin: Vec<String>,
    pub product: Vec<String>,
    pub matches: bool,
}

impl EulerCheck {
    pub fn run(src: &dyn CoeffSource, f: &EigenSystem, g: &EigenSystem, q: u64, shift: u32, tests: &[HalfIntMat]) -> Result<Self> {
        let (l1, l2) = hecke_tq(src, q, tests)?;
        let spin = spin_factor(q, src.weight(), &l1, &l2);
        let product = euler_factor_pair(q, f, g, shift)?;
        let strs = |v: &[Q]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Ok(EulerCheck {
            q,
            shift,
            lambda_q: l1.to_string(),
            lambda_q2: l2.to_string(),
            matches: spin == product,
            spin: strs(&spin),
            product: strs(&product),
        })
    }
}

/// The unique shift s0 for which the spin factor at q equals the product of the f- and
/// g-factors; None when no shift (or more than one) works.
pub fn calibrate_shift(src: &dyn CoeffSource, f: &EigenSystem, g: &EigenSystem, q: u64, tests: &[HalfIntMat]) -> Result<Option<u32>> {
    let (l1, l2) = hecke_tq(src, q, tests)?;
    let spin = spin_factor(q, src.weight(), &l1, &l2);
    let mut hits = Vec::new();
    for s0 in 0..=f.weight() {
        if euler_factor_pair(q, f, g, s0)? == spin {
            hits.push(s0);
        }
    }
    Ok(if hits.len() == 1 { Some(hits[0]) } else { None })
}
