//! Fourier–Jacobi coefficients and the search for a prime index carrying a nonzero one.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::{u_p, HalfIntMat, SiegelCoeffTable};
use crate::arith::{gcd_i64, is_prime, prime_divisors, xgcd, Q};
use crate::error::{Error, Result};

/// φ_m(τ, z) = Σ c(n, r) qⁿ ζʳ with c(n, r) = a(F, (n, r/2; r/2, m)).
///
/// Only r in (−m, m] is stored; c(n, r) depends on 4nm − r² and r mod 2m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiSlice {
    pub index: i64,
    /// Weight and level of the Siegel form the slice was cut from.
    pub weight: u32,
    pub level: u64,
    pub disc_bound: i64,
    pub cmap: BTreeMap<(i64, i64), Q>,
}

impl JacobiSlice {
    /// c(n, r) for any (n, r) with 0 < 4nm − r² ≤ bound.
    pub fn get(&self, n: i64, r: i64) -> Result<Q> {
        let m = self.index;
        let d = 4 * n * m - r * r;
        if d <= 0 {
            return Err(Error::NotPositiveDefinite(format!("({n}, {r}/2; {r}/2, {m})")));
        }
        if d > self.disc_bound {
            return Err(Error::DepthExceeded { requested: d, available: self.disc_bound });
        }
        // shift r by 2mλ into (−m, m]; n moves so that 4nm − r² stays fixed
        let lam = (m - r).div_euclid(2 * m);
        let r2 = r + 2 * m * lam;
        let n2 = (d + r2 * r2) / (4 * m);
        Ok(self.cmap.get(&(n2, r2)).cloned().unwrap_or_else(Q::zero))
    }

    pub fn is_zero(&self) -> bool {
        self.cmap.values().all(Zero::is_zero)
    }
}

pub fn fourier_jacobi(table: &SiegelCoeffTable, m: i64) -> Result<JacobiSlice> {
    if m < 1 {
        return Err(Error::Unsupported(format!("Fourier–Jacobi index {m} must be positive")));
    }
    let bound = table.disc_bound;
    let mut cmap = BTreeMap::new();
    for r in (1 - m)..=m {
        let mut n = (r * r) / (4 * m) + 1;
        while 4 * n * m - r * r <= bound {
            cmap.insert((n, r), table.get(&HalfIntMat::new(n, r, m)?)?);
            n += 1;
        }
    }
    Ok(JacobiSlice { index: m, weight: table.weight, level: table.level, disc_bound: bound, cmap })
}

/// A prime p ∤ N and T′ = (n′, r′/2; r′/2, p) with a(F, T′) ≠ 0.
///
/// The prime is also taken prime to disc T, so that r′ ≢ 0 (mod p) and the two residues
/// ±r′ (mod 2p) are distinct.
///
/// Scans primitive keys with nonzero coefficient in order of |disc|, and for each looks for a
/// primitive vector (x, y) of height ≤ `search` at which the form T takes a prime value.
pub fn prime_anchor(table: &SiegelCoeffTable, search: i64) -> Result<(u64, HalfIntMat)> {
    let level = table.level;
    let mut candidates: Vec<HalfIntMat> = table.nonzero().filter(|(t, _)| t.is_primitive()).map(|(t, _)| *t).collect();
    if candidates.is_empty() {
        // divide imprimitive keys by primes p | N with λ_p ≠ 0
        let lambdas: BTreeMap<u64, Q> = prime_divisors(level)
            .into_iter()
            .filter_map(|p| u_p(table, p).ok().map(|l| (p, l)))
            .collect();
        for (t, v) in table.nonzero() {
            let (t0, v0) = super::lemma21_divide(t, v, &lambdas);
            if t0.is_primitive() && !v0.is_zero() {
                candidates.push(super::reduce_t(&t0)?.0);
            }
        }
    }
    candidates.sort_by_key(|t| (t.abs_disc(), *t));
    candidates.dedup();
    for t in &candidates {
        let good = |v: i64| v > 1 && is_prime(v as u64) && level % v as u64 != 0 && t.abs_disc() % v != 0;
        if good(t.c) {
            return Ok((t.c as u64, *t));
        }
        for h in 1..=search {
            for x in -h..=h {
                for y in 0..=h {
                    if x.abs().max(y) != h || (y == 0 && x < 0) || gcd_i64(x, y) != 1 {
                        continue;
                    }
                    let v = t.form().eval(x, y);
                    if !good(v) {
                        continue;
                    }
                    // unimodular A = (u, x; w, y) with uy − wx = 1
                    let (_, s, r) = xgcd(x, y);
                    let a = [[r, x], [-s, y]];
                    let tp = t.transform(&a);
                    debug_assert_eq!(tp.c, v);
                    return Ok((v as u64, tp));
                }
            }
        }
    }
    Err(Error::AnchorNotFound(search))
}
