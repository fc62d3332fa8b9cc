//! Simultaneous rational eigenvectors of the Brandt matrices and the pairs
//! (f, g) they produce.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::brandt::{default_kernel, BrandtSystem};
use super::order::eichler_order;
use crate::arith::linalg::{charpoly, kernel, mat_mul, mat_sub_scalar, mat_vec, QMat, QVec};
use crate::arith::{common_denominator, gcd_i64, is_squarefree, prime_divisors, primes_up_to, qi, Q};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenSystem {
    /// (weight, level, index)
    pub label: (u32, u64, usize),
    /// Integral primitive eigenvector in the full (class × harmonic) coordinates.
    #[serde(serialize_with = "ser_qvec")]
    pub eigenvector: QVec,
    /// Hecke eigenvalues a_q for primes q up to the bound, including q | N.
    #[serde(serialize_with = "ser_qmap")]
    pub hecke: BTreeMap<u64, Q>,
    pub al_signs: BTreeMap<u64, i32>,
    pub cuspidal: bool,
}

fn ser_qvec<S: serde::Serializer>(v: &QVec, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn ser_qmap<S: serde::Serializer>(m: &BTreeMap<u64, Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v.to_string())))
}

impl EigenSystem {
    pub fn weight(&self) -> u32 {
        self.label.0
    }

    pub fn level(&self) -> u64 {
        self.label.1
    }

    pub fn a(&self, p: u64) -> Option<i64> {
        self.hecke.get(&p).and_then(|x| x.to_integer().to_i64())
    }

    /// Root number of L(s, f): (−1)^{w/2} Π_{p | N} δ_p.
    pub fn root_number(&self) -> i32 {
        let s: i32 = self.al_signs.values().product();
        if (self.weight() / 2) % 2 == 0 {
            s
        } else {
            -s
        }
    }
}

/// A block of the decomposition with at least one irrational Hecke eigenvalue.
#[derive(Clone, Debug, Serialize)]
pub struct IrrationalBlock {
    pub dim: usize,
    /// Characteristic polynomial of B(q) on the block, constant term first.
    pub charpolys: BTreeMap<u64, Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub rational: Vec<EigenSystem>,
    /// Rational blocks of dimension > 1 (old forms appearing with multiplicity).
    pub multiple: Vec<usize>,
    pub irrational: Vec<IrrationalBlock>,
}

fn poly_eval(p: &[Q], x: &Q) -> Q {
    p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

fn poly_div_linear(p: &[Q], root: &Q) -> Vec<Q> {
    // synthetic division by (x − root)
    let n = p.len() - 1;
    let mut out = vec![Q::zero(); n];
    let mut carry = Q::zero();
    for i in (0..n).rev() {
        carry = &p[i + 1] + &carry * root;
        out[i] = carry.clone();
    }
    out
}

fn poly_at_matrix(p: &[Q], a: &QMat) -> QMat {
    let n = a.len();
    let mut acc = vec![vec![Q::zero(); n]; n];
    for c in p.iter().rev() {
        acc = mat_mul(&acc, a);
        for (i, r) in acc.iter_mut().enumerate() {
            r[i] += c;
        }
    }
    acc
}

/// Restriction of a matrix (acting on column vectors in D-space) to a stable subspace with basis rows.
fn restrict(a: &QMat, basis: &[QVec]) -> QMat {
    let k = basis.len();
    let mut out = vec![vec![Q::zero(); k]; k];
    for (c, v) in basis.iter().enumerate() {
        let img = mat_vec(a, v);
        let co = crate::arith::linalg::coordinates(basis, &img).expect("stable subspace");
        for r in 0..k {
            out[r][c] = co[r].clone();
        }
    }
    out
}

fn combine(basis: &[QVec], coeffs: &[Q]) -> QVec {
    let n = basis[0].len();
    let mut v = vec![Q::zero(); n];
    for (b, c) in basis.iter().zip(coeffs) {
        if c.is_zero() {
            continue;
        }
        for (x, y) in v.iter_mut().zip(b) {
            *x += c * y;
        }
    }
    v
}

/// Scale to a primitive integer vector whose first nonzero entry is positive.
pub fn primitive_integral(v: &[Q]) -> QVec {
    let den = common_denominator(v.iter());
    let dq = Q::from_integer(den);
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &dq).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let sign = ints.iter().find(|x| !x.is_zero()).map(|x| x.signum()).unwrap_or(BigInt::one());
    let g = g * sign;
    ints.into_iter().map(|x| Q::from_integer(x / &g)).collect()
}

#[derive(Clone)]
struct Block {
    basis: Vec<QVec>,
    irrational: bool,
    charpolys: BTreeMap<u64, Vec<Q>>,
}

/// Split the invariant space under B(q) for good primes q ≤ qmax.
pub fn decompose(bs: &BrandtSystem, qmax: u64) -> Result<Decomposition> {
    let level = bs.order.level;
    let k = bs.dim();
    let needed = primes_up_to(qmax).into_iter().chain(prime_divisors(level)).max().unwrap_or(1);
    if needed > bs.nmax {
        return Err(Error::DepthExceeded {
            requested: needed as i64,
            available: bs.nmax as i64,
        });
    }
    let identity: Vec<QVec> = (0..k).map(|i| (0..k).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    let mut blocks = vec![Block {
        basis: identity,
        irrational: false,
        charpolys: BTreeMap::new(),
    }];
    let good: Vec<u64> = primes_up_to(qmax).into_iter().filter(|p| level % p != 0).collect();
    let restricted: BTreeMap<u64, QMat> = good.iter().map(|&q| (q, bs.restricted(q).unwrap())).collect();
    let half = bs.weight as i64 / 2;
    for &q in &good {
        let a = &restricted[&q];
        let mut next = Vec::new();
        for blk in blocks {
            if blk.basis.len() == 1 {
                next.push(blk);
                continue;
            }
            let r = restrict(a, &blk.basis);
            let mut cp = charpoly(&r);
            let bound = (q as i64 + 1) * (q as i64).pow(half as u32 - 1) + 1;
            let mut roots = Vec::new();
            for lam in -bound..=bound {
                let l = qi(lam);
                while cp.len() > 1 && poly_eval(&cp, &l).is_zero() {
                    cp = poly_div_linear(&cp, &l);
                    if !roots.contains(&lam) {
                        roots.push(lam);
                    }
                }
            }
            for lam in &roots {
                let ker = kernel(&mat_sub_scalar(&r, &qi(*lam)), r.len());
                let basis: Vec<QVec> = ker.iter().map(|c| combine(&blk.basis, c)).collect();
                next.push(Block {
                    basis,
                    irrational: blk.irrational,
                    charpolys: blk.charpolys.clone(),
                });
            }
            if cp.len() > 1 {
                let ker = kernel(&poly_at_matrix(&cp, &r), r.len());
                let basis: Vec<QVec> = ker.iter().map(|c| combine(&blk.basis, c)).collect();
                let mut charpolys = blk.charpolys.clone();
                charpolys.insert(q, charpoly(&restrict(a, &basis)));
                next.push(Block {
                    basis,
                    irrational: true,
                    charpolys,
                });
            }
        }
        blocks = next;
    }

    let mut rational = Vec::new();
    let mut multiple = Vec::new();
    let mut irrational = Vec::new();
    for blk in blocks {
        if blk.irrational {
            irrational.push(IrrationalBlock {
                dim: blk.basis.len(),
                charpolys: blk
                    .charpolys
                    .iter()
                    .map(|(q, p)| (*q, p.iter().map(|c| c.to_string()).collect()))
                    .collect(),
            });
        } else if blk.basis.len() > 1 {
            multiple.push(blk.basis.len());
        } else {
            let coords = &blk.basis[0];
            let full = primitive_integral(&combine(&bs.invariant, coords));
            rational.push(eigen_data(bs, full, qmax)?);
        }
    }
    // cusp forms first, then by Hecke eigenvalues
    rational.sort_by_key(|e| (!e.cuspidal, e.hecke.values().cloned().collect::<Vec<_>>()));
    for (i, e) in rational.iter_mut().enumerate() {
        e.label.2 = i;
    }
    Ok(Decomposition {
        rational,
        multiple,
        irrational,
    })
}

fn eigen_data(bs: &BrandtSystem, v: QVec, qmax: u64) -> Result<EigenSystem> {
    let level = bs.order.level;
    let piv = v.iter().position(|x| !x.is_zero()).unwrap();
    let mut hecke = BTreeMap::new();
    let mut al = BTreeMap::new();
    let half = bs.weight / 2;
    let mut primes = primes_up_to(qmax);
    for p in prime_divisors(level) {
        if !primes.contains(&p) {
            primes.push(p);
        }
    }
    primes.sort_unstable();
    let m1 = bs.order.m1();
    for p in primes {
        if level % p == 0 {
            // The quaternionic W_p eigenvalue ε_p equals the classical Atkin–Lehner sign δ_p at
            // p | N/M1 and its negative at p | M1; then a_p = −δ_p p^{w/2 − 1}.
            let img = mat_vec(&bs.atkin_lehner[&p], &v);
            let eps = &img[piv] / &v[piv];
            if img.iter().zip(&v).any(|(a, b)| a != &(b * &eps)) {
                return Err(Error::NotEigen(p, "not an Atkin-Lehner eigenvector".into()));
            }
            let e = eps.to_integer().to_i32().filter(|e| e.abs() == 1 && eps.is_integer());
            let Some(e) = e else {
                return Err(Error::NotEigen(p, format!("Atkin-Lehner eigenvalue {eps} is not ±1")));
            };
            let delta = if m1 % p == 0 { -e } else { e };
            al.insert(p, delta);
            hecke.insert(p, qi(-(delta as i64) * (p as i64).pow(half - 1)));
            continue;
        }
        let img = mat_vec(&bs.matrices[&p], &v);
        let lam = &img[piv] / &v[piv];
        if img.iter().zip(&v).any(|(a, b)| a != &(b * &lam)) {
            return Err(Error::NotEigen(p, "Brandt eigenvector is not an eigenvector at p".into()));
        }
        hecke.insert(p, lam);
    }
    // Eisenstein vector in weight 2: constant on classes; cusp forms are orthogonal to it under Σ v_i/e_i
    let cuspidal = if bs.weight == 2 {
        let s: Q = v
            .iter()
            .zip(&bs.order.unit_halves)
            .map(|(x, &e)| x / qi(e as i64))
            .sum();
        s.is_zero()
    } else {
        true
    };
    Ok(EigenSystem {
        label: (bs.weight, level, 0),
        eigenvector: v,
        hecke,
        al_signs: al,
        cuspidal,
    })
}

/// Rational eigensystems of the Brandt system (multiplicity-one, hence new at the level).
pub fn eigensystems(bs: &BrandtSystem, qmax: u64) -> Result<Vec<EigenSystem>> {
    Ok(decompose(bs, qmax)?.rational)
}

/// Like [`eigensystems`] but an error if any part of the cuspidal space is irrational.
pub fn eigensystems_strict(bs: &BrandtSystem, qmax: u64) -> Result<Vec<EigenSystem>> {
    let d = decompose(bs, qmax)?;
    if let Some(b) = d.irrational.first() {
        return Err(Error::IrrationalEigensystem(format!("block of dimension {} with charpolys {:?}", b.dim, b.charpolys)));
    }
    Ok(d.rational)
}

/// Rational cuspidal newforms of weight w and squarefree level N, realised in the algebra
/// ramified at the smallest prime of N.
pub fn newforms(weight: u32, level: u64, qmax: u64) -> Result<(BrandtSystem, Vec<EigenSystem>)> {
    let m1 = *prime_divisors(level)
        .first()
        .ok_or_else(|| Error::Unsupported("level 1 has no definite realisation".into()))?;
    let ord = eichler_order(m1, level)?;
    let nmax = primes_up_to(qmax).into_iter().chain(prime_divisors(level)).max().unwrap_or(1);
    let bs = BrandtSystem::build(&ord, weight, nmax, default_kernel(weight).as_ref())?;
    let forms = eigensystems(&bs, qmax)?.into_iter().filter(|e| e.cuspidal).collect();
    Ok((bs, forms))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairCandidate {
    pub f: EigenSystem,
    pub g: EigenSystem,
    pub n1: u64,
    pub n2: u64,
    /// Every M1 | gcd(N1, N2) with an odd number of prime factors.
    pub m1_choices: Vec<u64>,
}

/// All admissible pairs (f of weight 2k, g of weight 2) with squarefree levels ≤ `level_bound`,
/// M = gcd(N1, N2) > 1 and matching Atkin–Lehner signs at every p | M.
pub fn select_pair(weights: (u32, u32), level_bound: u64, allow_k1: bool, qmax: u64) -> Result<Vec<PairCandidate>> {
    let (wf, wg) = weights;
    let k = wf / 2;
    if wg != 2 || wf % 2 != 0 {
        return Err(Error::Unsupported(format!("weights must be (2k, 2), got ({wf}, {wg})")));
    }
    if !(k > 1 && k % 2 == 1) && !(allow_k1 && k == 1) {
        return Err(Error::Unsupported(format!("k = {k} must be odd and greater than 1")));
    }
    let levels: Vec<u64> = (2..=level_bound).filter(|&n| is_squarefree(n)).collect();
    let mut fs: Vec<(u64, EigenSystem)> = Vec::new();
    let mut gs: Vec<(u64, EigenSystem)> = Vec::new();
    for &n in &levels {
        for e in newforms(wf, n, qmax)?.1 {
            fs.push((n, e));
        }
        if wf != wg {
            for e in newforms(wg, n, qmax)?.1 {
                gs.push((n, e));
            }
        }
    }
    if wf == wg {
        gs = fs.clone();
    }
    let mut out = Vec::new();
    for (n1, f) in &fs {
        for (n2, g) in &gs {
            if let Ok(m1s) = admissible(f, *n1, g, *n2) {
                out.push(PairCandidate {
                    f: f.clone(),
                    g: g.clone(),
                    n1: *n1,
                    n2: *n2,
                    m1_choices: m1s,
                });
            }
        }
    }
    Ok(out)
}

/// Admissibility of a pair; returns the possible ramified products M1.
pub fn admissible(f: &EigenSystem, n1: u64, g: &EigenSystem, n2: u64) -> Result<Vec<u64>> {
    if f.weight() == g.weight() && n1 == n2 && f.hecke == g.hecke {
        return Err(Error::Unsupported("f and g are multiples of each other".into()));
    }
    let m = gcd_i64(n1 as i64, n2 as i64) as u64;
    if m == 1 {
        return Err(Error::Unsupported("gcd(N1, N2) = 1".into()));
    }
    for p in prime_divisors(m) {
        if f.al_signs.get(&p) != g.al_signs.get(&p) {
            return Err(Error::AtkinLehnerMismatch(p));
        }
    }
    let ps = prime_divisors(m);
    let mut m1s = Vec::new();
    for mask in 1u32..(1 << ps.len()) {
        if mask.count_ones() % 2 == 1 {
            m1s.push(ps.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p).product());
        }
    }
    m1s.sort_unstable();
    Ok(m1s)
}
