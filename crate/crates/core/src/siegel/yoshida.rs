//! The Yoshida lift as a quaternionic theta series.
//!
//! For ideal classes I_1..I_h of an Eichler order with connecting lattices
//! L_ij = I_i Ī_j, the lift of (f, g) is
//!
//!   a(F, T) = Σ_{i,j} g(j) / (e_i e_j) Σ_{(x₁, x₂) ∈ L_ij², Gram = T} φ_f(i)(w / nrd L_ij)
//!
//! where w is the pure part of x₁x̄₂ and φ_f(i) is the harmonic polynomial that
//! the Brandt eigenvector of f attaches to class i. The map (x₁, x₂) ↦ w is
//! alternating, so the summand changes by det(A)^ν under (x₁, x₂) ↦ (x₁, x₂)A and
//! the series is GL₂(ℤ)-invariant exactly when ν = k − 1 is even.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{reduced_keys, CoeffSource, HalfIntMat, SiegelCoeffTable};
use crate::arith::linalg::QVec;
use crate::arith::{common_denominator, gcd_i64, prime_divisors, q128, qi, Q};
use crate::error::{Error, Result};
use crate::quaternion::brandt::{default_kernel, BrandtSystem};
use crate::quaternion::eigen::{decompose, EigenSystem};
use crate::quaternion::lattice::{for_each_short_vector, int_element, Lattice};
use crate::quaternion::order::{eichler_order, EichlerOrderData};
use crate::quaternion::QuatAlgebra;

/// Stamped into table provenance; bump whenever the kernel or its normalisation changes.
pub const KERNEL_VERSION: &str = "pluriharmonic-pure-w/1";

/// One connecting lattice together with its integral kernel polynomial and weight.
struct PairData {
    gram: [[i64; 4]; 4],
    rows: [[i128; 4]; 4],
    poly: Vec<([u32; 3], i128)>,
    weight: Q,
}

pub struct YoshidaLift {
    /// Siegel weight k + 1.
    pub weight: u32,
    pub level: u64,
    pub m1: u64,
    pub order: EichlerOrderData,
    pub f_vector: QVec,
    pub g_vector: QVec,
    pub provenance: String,
    alg: QuatAlgebra,
    pairs: Vec<PairData>,
}

struct Vector {
    c: [i64; 4],
    q: i64,
    x: [i128; 4],
}

fn short_vectors(gram: &[[i64; 4]; 4], rows: &[[i128; 4]; 4], bound: i64) -> Vec<Vector> {
    let mut out = Vec::new();
    for_each_short_vector(gram, bound, |c, q| out.push(Vector { c: *c, q, x: int_element(rows, c) }));
    out.sort_by(|u, v| (u.q, u.c).cmp(&(v.q, v.c)));
    out
}

#[inline]
fn bilinear(gc: &[i64; 4], c: &[i64; 4]) -> i64 {
    gc[0] * c[0] + gc[1] * c[1] + gc[2] * c[2] + gc[3] * c[3]
}

fn gram_times(gram: &[[i64; 4]; 4], c: &[i64; 4]) -> [i64; 4] {
    let mut out = [0i64; 4];
    for (s, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|t| gram[s][t] * c[t]).sum();
    }
    out
}

#[inline]
fn eval_poly(poly: &[([u32; 3], i128)], w: &[i128; 3]) -> i128 {
    poly.iter().map(|(e, c)| c * w[0].pow(e[0]) * w[1].pow(e[1]) * w[2].pow(e[2])).sum()
}

/// Pure part of X₁ X̄₂ for integer quaternions.
#[inline]
fn pure_product(alg: &QuatAlgebra, x1: &[i128; 4], x2: &[i128; 4]) -> [i128; 3] {
    let p = alg.mul_int(x1, &[x2[0], -x2[1], -x2[2], -x2[3]]);
    [p[1], p[2], p[3]]
}

/// Σ over (x₁, x₂) ∈ L² with Gram matrix T of P(pure(x₁x̄₂) / nrd L), for a polynomial P on
/// pure quaternions given by monomial exponents and rational coefficients.
pub fn theta_pair_coeff(alg: &QuatAlgebra, l: &Lattice, poly: &[([u32; 3], Q)], t: &HalfIntMat) -> Q {
    let gram = l.int_gram(alg);
    let (den, rows) = l.integral_basis();
    let nu = poly.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0);
    let pden = common_denominator(poly.iter().map(|(_, c)| c));
    let ipoly: Vec<([u32; 3], i128)> = poly
        .iter()
        .map(|(e, c)| (*e, (c * Q::from_integer(pden.clone())).to_integer().to_i128().expect("kernel overflow")))
        .collect();
    let s = pair_sum_at(alg, &gram, &rows, &ipoly, t);
    let scale = Q::from_integer(pden) * (q128(den * den) * l.nrd(alg)).pow(nu as i32);
    q128(s) / scale
}

fn pair_sum_at(alg: &QuatAlgebra, gram: &[[i64; 4]; 4], rows: &[[i128; 4]; 4], poly: &[([u32; 3], i128)], t: &HalfIntMat) -> i128 {
    if !t.is_positive_definite() {
        return 0;
    }
    let shell = |n: i64| -> Vec<Vector> { short_vectors(gram, rows, n).into_iter().filter(|v| v.q == n).collect() };
    let first = shell(t.a);
    let second = if t.c == t.a { None } else { Some(shell(t.c)) };
    let second = second.as_ref().unwrap_or(&first);
    let mut acc = 0i128;
    for v1 in &first {
        let gc = gram_times(gram, &v1.c);
        for v2 in second {
            if bilinear(&gc, &v2.c) == t.b {
                acc += eval_poly(poly, &pure_product(alg, &v1.x, &v2.x));
            }
        }
    }
    acc
}

/// The rational eigenvector of `es` on `order`, found by matching Hecke eigenvalues at good primes.
fn locate(order: &EichlerOrderData, es: &EigenSystem) -> Result<(BrandtSystem, QVec)> {
    let good: Vec<u64> = es.hecke.keys().copied().filter(|p| order.level % p != 0).collect();
    let qmax = good.iter().copied().max().unwrap_or(2);
    let nmax = prime_divisors(order.level).into_iter().chain([qmax]).max().unwrap_or(qmax);
    let bs = BrandtSystem::build(order, es.weight(), nmax, default_kernel(es.weight()).as_ref())?;
    let dec = decompose(&bs, qmax)?;
    let hit = dec
        .rational
        .into_iter()
        .find(|e| good.iter().all(|p| e.hecke.get(p) == es.hecke.get(p)));
    match hit {
        Some(e) => Ok((bs, e.eigenvector)),
        None => Err(Error::IrrationalEigensystem(format!(
            "no rational eigenvector with the eigenvalues of form {:?} on this order",
            es.label
        ))),
    }
}

fn provenance(f: &EigenSystem, g: &EigenSystem, m1: u64) -> String {
    let qs = |e: &EigenSystem| -> BTreeMap<String, String> { e.hecke.iter().map(|(p, a)| (p.to_string(), a.to_string())).collect() };
    let doc = serde_json::json!({
        "kernel": KERNEL_VERSION,
        "m1": m1,
        "f": { "label": f.label, "hecke": qs(f) },
        "g": { "label": g.label, "hecke": qs(g) },
    });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

impl YoshidaLift {
    /// Set up the theta data for the pair (f of weight 2k, g of weight 2) on the Eichler order
    /// of level N in the algebra ramified at the primes of M1.
    pub fn new(f: &EigenSystem, g: &EigenSystem, m1: u64) -> Result<Self> {
        if g.weight() != 2 || f.weight() % 2 != 0 || f.weight() < 2 {
            return Err(Error::Unsupported(format!("weights must be (2k, 2), got ({}, {})", f.weight(), g.weight())));
        }
        let k = f.weight() / 2;
        if (k + 1) % 2 != 0 {
            return Err(Error::Unsupported(format!("Siegel weight {} is odd; scalar tables need it even", k + 1)));
        }
        if f.level() != g.level() {
            return Err(Error::Unsupported(format!("levels {} and {} differ; only equal levels are built", f.level(), g.level())));
        }
        let level = f.level();
        let m = gcd_i64(f.level() as i64, g.level() as i64) as u64;
        for p in prime_divisors(m) {
            if f.al_signs.get(&p) != g.al_signs.get(&p) {
                return Err(Error::AtkinLehnerMismatch(p));
            }
        }
        if m1 == 0 || m % m1 != 0 || prime_divisors(m1).len() % 2 == 0 {
            return Err(Error::Unsupported(format!("M1 = {m1} must divide {m} with an odd number of prime factors")));
        }
        let order = eichler_order(m1, level)?;
        let (bsf, fv) = locate(&order, f)?;
        let (_, gv) = locate(&order, g)?;
        let alg = order.algebra.clone();
        let hs = &bsf.harmonic;
        let d = hs.dim();
        let nu = hs.nu as i32;
        let h = order.h();
        let mut pairs = Vec::new();
        for i in 0..h {
            let rat = hs.combination(&fv[i * d..(i + 1) * d]);
            if rat.iter().all(Zero::is_zero) {
                continue;
            }
            let pden = common_denominator(rat.iter());
            let pq = Q::from_integer(pden.clone());
            let poly: Vec<([u32; 3], i128)> = hs
                .monos
                .list
                .iter()
                .zip(&rat)
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (*e, (c * &pq).to_integer().to_i128().expect("kernel overflow")))
                .collect();
            for j in 0..h {
                if gv[j].is_zero() {
                    continue;
                }
                let l = order.connecting_lattice(i, j);
                let (den, rows) = l.integral_basis();
                let ee = qi((order.unit_halves[i] * order.unit_halves[j]) as i64);
                let scale = ee * &pq * (q128(den * den) * l.nrd(&alg)).pow(nu);
                pairs.push(PairData { gram: l.int_gram(&alg), rows, poly: poly.clone(), weight: &gv[j] / scale });
            }
        }
        Ok(YoshidaLift {
            weight: k + 1,
            level,
            m1,
            provenance: provenance(f, g, m1),
            order,
            f_vector: fv,
            g_vector: gv,
            alg,
            pairs,
        })
    }

    /// Exact coefficient table for every reduced T with |disc T| ≤ bound.
    pub fn table(&self, bound: i64) -> SiegelCoeffTable {
        let amax = (1..).take_while(|a| 3 * a * a <= bound).last().unwrap_or(0);
        let cmax = (bound + 1) / 4;
        let prepared: Vec<(Vec<Vector>, Vec<Vector>)> = self
            .pairs
            .iter()
            .map(|p| (short_vectors(&p.gram, &p.rows, amax), short_vectors(&p.gram, &p.rows, cmax)))
            .collect();
        let jobs: Vec<(usize, usize)> = prepared
            .iter()
            .enumerate()
            .flat_map(|(pi, (firsts, _))| (0..firsts.len()).map(move |xi| (pi, xi)))
            .collect();
        let partial: Vec<(usize, BTreeMap<HalfIntMat, i128>)> = jobs
            .par_iter()
            .map(|&(pi, xi)| {
                let pd = &self.pairs[pi];
                let (firsts, seconds) = &prepared[pi];
                let v1 = &firsts[xi];
                let a = v1.q;
                let gc = gram_times(&pd.gram, &v1.c);
                let clim = (bound + a * a) / (4 * a);
                let start = seconds.partition_point(|v| v.q < a);
                let mut local = BTreeMap::new();
                for v2 in seconds[start..].iter().take_while(|v| v.q <= clim) {
                    let b = bilinear(&gc, &v2.c);
                    if b < 0 || b > a {
                        continue;
                    }
                    let dd = 4 * a * v2.q - b * b;
                    if dd <= 0 || dd > bound {
                        continue;
                    }
                    let val = eval_poly(&pd.poly, &pure_product(&self.alg, &v1.x, &v2.x));
                    if val != 0 {
                        *local.entry(HalfIntMat { a, b, c: v2.q }).or_insert(0i128) += val;
                    }
                }
                (pi, local)
            })
            .collect();
        let mut sums: Vec<BTreeMap<HalfIntMat, i128>> = vec![BTreeMap::new(); self.pairs.len()];
        for (pi, local) in partial {
            for (t, v) in local {
                *sums[pi].entry(t).or_insert(0) += v;
            }
        }
        let mut coeffs: BTreeMap<HalfIntMat, Q> = reduced_keys(bound).into_iter().map(|t| (t, Q::zero())).collect();
        for (pd, s) in self.pairs.iter().zip(&sums) {
            for (t, v) in s {
                if let Some(c) = coeffs.get_mut(t) {
                    *c += &pd.weight * q128(*v);
                }
            }
        }
        SiegelCoeffTable {
            weight: self.weight,
            level: self.level,
            disc_bound: bound,
            coeffs,
            provenance: self.provenance.clone(),
        }
    }
}

impl CoeffSource for YoshidaLift {
    fn weight(&self) -> u32 {
        self.weight
    }
    fn level(&self) -> u64 {
        self.level
    }
    /// Direct evaluation at any positive definite T, with no depth limit.
    fn coeff(&self, t: &HalfIntMat) -> Result<Q> {
        if !t.is_positive_definite() {
            return Err(Error::NotPositiveDefinite(t.to_string()));
        }
        let mut acc = Q::zero();
        for pd in &self.pairs {
            let s = pair_sum_at(&self.alg, &pd.gram, &pd.rows, &pd.poly, t);
            if s != 0 {
                acc += &pd.weight * q128(s);
            }
        }
        Ok(acc)
    }
}

/// Build, post-check and return the coefficient table of the Yoshida lift of (f, g).
pub fn build_yoshida(f: &EigenSystem, g: &EigenSystem, m1: u64, bound: i64) -> Result<SiegelCoeffTable> {
    let lift = YoshidaLift::new(f, g, m1)?;
    let table = lift.table(bound);
    if table.is_zero() {
        return Err(Error::ZeroLift);
    }
    for p in prime_divisors(table.level) {
        match super::u_p(&table, p) {
            Ok(_) | Err(Error::InsufficientDepth(_)) => {}
            Err(e) => return Err(e),
        }
    }
    // Spot-check class invariance against direct evaluation at transformed matrices.
    let moves = [[[1, 1], [0, 1]], [[0, 1], [1, 0]], [[2, 1], [1, 1]], [[1, -2], [1, -1]]];
    for (t, v) in table.nonzero().take(6) {
        for m in &moves {
            let tt = t.transform(m);
            if &lift.coeff(&tt)? != v {
                return Err(Error::HardFailure(format!("a(F, {tt}) differs from a(F, {t})")));
            }
        }
    }
    Ok(table)
}
