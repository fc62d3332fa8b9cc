//! Fourier coefficients of a Brandt eigenform far past the range where whole Brandt
//! matrices are affordable.
//!
//! For a prime p ∤ N only one row of B(p) is needed, and only through the value of the
//! image polynomial at a single point y₀: (B(p)φ)(i₀)(y₀) = a_p φ(i₀)(y₀). Each lattice
//! vector then costs two quaternion products and one polynomial evaluation.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::eigen::EigenSystem;
use super::harmonic::HarmonicSpace;
use super::lattice::{for_each_short_vector_with_last, int_element, last_coordinate_bound};
use super::order::EichlerOrderData;
use crate::arith::{common_denominator, primes_up_to, q128, Q};
use crate::error::{Error, Result};

type IntPoly = Vec<([u32; 3], i128)>;

fn eval(p: &IntPoly, y: &[i128; 3]) -> i128 {
    p.iter().map(|(e, c)| c * y[0].pow(e[0]) * y[1].pow(e[1]) * y[2].pow(e[2])).sum()
}

/// a_p for the primes p ≤ pmax not dividing the level, for the Brandt eigenvector `v`.
pub fn prime_eigenvalues(order: &EichlerOrderData, weight: u32, v: &[Q], pmax: u64) -> Result<BTreeMap<u64, Q>> {
    let alg = &order.algebra;
    let nu = weight / 2 - 1;
    let hs = HarmonicSpace::new(alg, nu);
    let d = hs.dim();
    if v.len() != d * order.h() {
        return Err(Error::Unsupported(format!("vector of length {} on a space of dimension {}", v.len(), d * order.h())));
    }
    let polys: Vec<Vec<Q>> = (0..order.h()).map(|j| hs.combination(&v[j * d..(j + 1) * d])).collect();
    let den = Q::from_integer(common_denominator(polys.iter().flatten()));
    let ipolys: Vec<IntPoly> = polys
        .iter()
        .map(|p| {
            hs.monos
                .list
                .iter()
                .zip(p)
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (*e, (c * &den).to_integer().to_i128().expect("coefficient fits in i128")))
                .collect()
        })
        .collect();

    // a class and a small point where the eigenform does not vanish
    let (i0, y0, base) = (0..order.h())
        .flat_map(|i| small_points().map(move |y| (i, y)))
        .map(|(i, y)| (i, y, eval(&ipolys[i], &y)))
        .find(|(_, _, val)| *val != 0)
        .ok_or_else(|| Error::HardFailure("eigenvector is zero".into()))?;

    let level = order.level;
    let primes: Vec<u64> = primes_up_to(pmax).into_iter().filter(|p| level % p != 0).collect();
    let mut is_target = vec![false; pmax as usize + 1];
    for &p in &primes {
        is_target[p as usize] = true;
    }

    let mut total: BTreeMap<u64, Q> = primes.iter().map(|&p| (p, Q::zero())).collect();
    for j in 0..order.h() {
        let l = order.connecting_lattice(i0, j);
        let gram = l.int_gram(alg);
        let (lden, rows) = l.integral_basis();
        let r = last_coordinate_bound(&gram, pmax as i64);
        let poly = &ipolys[j];
        let sums = (-r..=r)
            .into_par_iter()
            .map(|last| {
                let mut acc = vec![0i128; pmax as usize + 1];
                for_each_short_vector_with_last(&gram, pmax as i64, last, |c, n| {
                    if !is_target[n as usize] {
                        return;
                    }
                    if nu == 0 {
                        acc[n as usize] += 1;
                        return;
                    }
                    let x = int_element(&rows, c);
                    let xb = [x[0], -x[1], -x[2], -x[3]];
                    let y = alg.mul_int(&alg.mul_int(&xb, &[0, y0[0], y0[1], y0[2]]), &x);
                    acc[n as usize] += eval(poly, &[y[1], y[2], y[3]]);
                });
                acc
            })
            .reduce(
                || vec![0i128; pmax as usize + 1],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        // weight of class j: 1 / (2 e_j · den^{2ν} · nrd(L)^ν)
        let w = Q::from_integer((2 * order.unit_halves[j]).into()) * q128(lden).pow(2 * nu as i32) * l.nrd(alg).pow(nu as i32);
        // in weight 2 every vector contributes the constant φ(j)
        let scale = if nu == 0 { eval(poly, &[0, 0, 0]) } else { 1 };
        for &p in &primes {
            let s = sums[p as usize] * scale;
            if s != 0 {
                *total.get_mut(&p).unwrap() += q128(s) / &w;
            }
        }
    }
    let base = q128(base);
    Ok(total.into_iter().map(|(p, t)| (p, t / &base)).collect())
}

fn small_points() -> impl Iterator<Item = [i128; 3]> {
    let r = 2i128;
    (-r..=r).flat_map(move |a| (-r..=r).flat_map(move |b| (-r..=r).map(move |c| [a, b, c])))
}

/// a(1..=nmax) of the newform attached to `e`, with a(0) = 0 as a placeholder.
///
/// Good primes come from [`prime_eigenvalues`] on `order`, which must carry the
/// eigenvector of `e`; bad primes from its Atkin–Lehner data. Agreement with the stored
/// eigenvalues is checked.
pub fn coefficients(order: &EichlerOrderData, e: &EigenSystem, nmax: u64) -> Result<Vec<i128>> {
    let level = e.level();
    let w = e.weight();
    let mut ap = prime_eigenvalues(order, w, &e.eigenvector, nmax)?;
    for (p, v) in &e.hecke {
        match ap.get(p) {
            Some(x) if x != v => return Err(Error::HardFailure(format!("a_{p}: row evaluation gives {x}, Brandt matrix gives {v}"))),
            None if level % p == 0 => {
                ap.insert(*p, v.clone());
            }
            _ => {}
        }
    }
    let mut ai = BTreeMap::new();
    for (p, v) in ap {
        if !v.is_integer() {
            return Err(Error::HardFailure(format!("a_{p} = {v} is not an integer")));
        }
        let x = v.to_integer().to_i128().ok_or_else(|| Error::HardFailure(format!("a_{p} overflows")))?;
        ai.insert(p, x);
    }
    let n = nmax as usize;
    let mut a = vec![0i128; n + 1];
    if n >= 1 {
        a[1] = 1;
    }
    // smallest prime factor sieve, then a(m) = a(p^e) a(m / p^e)
    let mut spf = vec![0usize; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut k = i;
            while k <= n {
                if spf[k] == 0 {
                    spf[k] = i;
                }
                k += i;
            }
        }
    }
    for m in 2..=n {
        let p = spf[m];
        let mut q = m;
        let mut e = 0u32;
        while q % p == 0 {
            q /= p;
            e += 1;
        }
        let app = *ai.get(&(p as u64)).ok_or(Error::InsufficientDepth(p as u64))?;
        let pe = if level % p as u64 == 0 {
            app.pow(e)
        } else {
            // a(p^{k+1}) = a_p a(p^k) − p^{w−1} a(p^{k−1})
            let pw = (p as i128).pow(w - 1);
            let (mut prev, mut cur) = (1i128, app);
            for _ in 1..e {
                let next = app * cur - pw * prev;
                prev = cur;
                cur = next;
            }
            cur
        };
        a[m] = pe * a[q];
    }
    Ok(a)
}
