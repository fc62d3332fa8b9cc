//! Maximal and Eichler orders, right ideal classes by neighbour stepping,
//! and the mass-formula completeness certificate.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::lattice::{for_each_short_vector, Lattice};
use super::{build_algebra, Quat, QuatAlgebra};
use crate::arith::linalg::kernel_mod_p;
use crate::arith::{factor, is_squarefree, prime_divisors, q, qi, Q};
use crate::error::{Error, Result};

/// An Eichler order together with a complete set of right ideal class representatives.
#[derive(Clone, Debug)]
pub struct EichlerOrderData {
    pub algebra: QuatAlgebra,
    pub level: u64,
    pub order: Lattice,
    /// Right ideals I_i of `order`; the first is the order itself.
    pub ideal_classes: Vec<Lattice>,
    pub ideal_norms: Vec<Q>,
    /// e_i = |O_l(I_i)^×| / 2.
    pub unit_halves: Vec<u64>,
}

impl EichlerOrderData {
    pub fn h(&self) -> usize {
        self.ideal_classes.len()
    }

    pub fn m1(&self) -> u64 {
        self.algebra.disc()
    }

    /// Σ 1/|O_l(I_i)^×| over the classes.
    pub fn mass(&self) -> Q {
        self.unit_halves.iter().map(|&e| q(1, 2 * e as i64)).sum()
    }

    /// The lattice I_i Ī_j, whose elements of reduced norm n·nrd(I_i)nrd(I_j) connect class j to class i.
    pub fn connecting_lattice(&self, i: usize, j: usize) -> Lattice {
        self.ideal_classes[i].mul(&self.algebra, &self.ideal_classes[j].conj())
    }
}

/// (1/24) Π_{p | M1} (p - 1) Π_{p | N/M1} (p + 1).
pub fn eichler_mass(m1: u64, level: u64) -> Q {
    let mut m = q(1, 24);
    for p in prime_divisors(m1) {
        m *= qi(p as i64 - 1);
    }
    for p in prime_divisors(level / m1) {
        m *= qi(p as i64 + 1);
    }
    m
}

fn is_order(alg: &QuatAlgebra, l: &Lattice) -> bool {
    l.basis.iter().all(|x| alg.is_integral(x))
}

/// Close a lattice containing 1 under multiplication; `None` if a non-integral element appears.
fn ring_closure(alg: &QuatAlgebra, l: &Lattice) -> Option<Lattice> {
    let mut cur = l.clone();
    for _ in 0..16 {
        if !is_order(alg, &cur) {
            return None;
        }
        let next = cur.add(&cur.mul(alg, &cur));
        if next == cur {
            return Some(cur);
        }
        cur = next;
    }
    None
}

/// A maximal order of the algebra, found by enlarging Z⟨1, i, j, k⟩ one prime at a time.
pub fn maximal_order(alg: &QuatAlgebra) -> Lattice {
    let e = |t: usize| {
        let mut x: Quat = [qi(0), qi(0), qi(0), qi(0)];
        x[t] = qi(1);
        x
    };
    let mut o = Lattice::from_generators(&[e(0), e(1), e(2), e(3)]);
    let target = qi(alg.disc() as i64);
    'outer: while o.discriminant(alg) != target {
        let ratio = (o.discriminant(alg) / &target).to_integer().to_u64().expect("discriminant ratio");
        for p in prime_divisors(ratio) {
            let pi = p as i64;
            let inv_p = q(1, pi);
            let n = p.pow(4);
            for idx in 1..n {
                let mut c = [0i64; 4];
                let mut t = idx;
                for cs in c.iter_mut() {
                    *cs = (t % p) as i64;
                    t /= p;
                }
                let y = o.element(&c);
                let x: Quat = [&y[0] * &inv_p, &y[1] * &inv_p, &y[2] * &inv_p, &y[3] * &inv_p];
                if !alg.is_integral(&x) {
                    continue;
                }
                let cand = Lattice::from_generators(&o.basis.iter().cloned().chain([x]).collect::<Vec<_>>());
                if let Some(r) = ring_closure(alg, &cand) {
                    if r != o {
                        o = r;
                        continue 'outer;
                    }
                }
            }
        }
        panic!("maximal order search stalled");
    }
    o
}

/// Integer coordinates of x in a lattice basis (panics if x ∉ L).
fn int_coords(l: &Lattice, x: &Quat) -> Vec<i64> {
    l.coords(x)
        .expect("element outside lattice span")
        .into_iter()
        .map(|c| {
            assert!(c.is_integer(), "element not in lattice");
            c.to_integer().to_i64().unwrap()
        })
        .collect()
}

/// E ∩ O_l(xO + pO) for a zero divisor x of O modulo p.
fn eichler_at(alg: &QuatAlgebra, o: &Lattice, e: &Lattice, p: u64) -> Lattice {
    let pi = p as i64;
    let pq = qi(pi);
    // zero divisor modulo p
    let mut zd = None;
    'search: for idx in 1..p.pow(4) {
        let mut c = [0i64; 4];
        let mut t = idx;
        for cs in c.iter_mut() {
            *cs = (t % p) as i64;
            t /= p;
        }
        let x = o.element(&c);
        let n = alg.nrd(&x).to_integer();
        if (n % BigInt::from(pi)).is_zero() {
            zd = Some(x);
            break 'search;
        }
    }
    let x = zd.expect("algebra is split at p, zero divisor must exist");
    let xo: Vec<Quat> = o.basis.iter().map(|b| alg.mul(&x, b)).collect();
    let po: Vec<Quat> = o.basis.iter().map(|b| [&b[0] * &pq, &b[1] * &pq, &b[2] * &pq, &b[3] * &pq]).collect();
    let ideal = Lattice::from_generators(&xo.into_iter().chain(po.clone()).collect::<Vec<_>>());
    // y ∈ E lies in O_l(I) iff y b ∈ I for each basis element b of I; linear over F_p since pE ⊂ O_l(I).
    // Coordinates in I of z ∈ O are (O-coords of z) · M⁻¹ where rows of M are I's basis in O-coords.
    let m: Vec<Vec<Q>> = ideal.basis.iter().map(|b| int_coords(o, b).into_iter().map(qi).collect()).collect();
    let minv = crate::arith::linalg::inverse(&m).expect("ideal basis is invertible");
    let mut rows: Vec<Vec<i64>> = Vec::new();
    // one linear condition per (basis element b of I, coordinate t): Σ_s c_s [coord_t((e_s b) in I)] ∈ Z
    let mut cols: Vec<Vec<Q>> = Vec::new();
    for es in &e.basis {
        let mut col = Vec::new();
        for b in &ideal.basis {
            let z = alg.mul(es, b);
            let oc: Vec<Q> = int_coords(o, &z).into_iter().map(qi).collect();
            for t in 0..4 {
                let v: Q = (0..4).map(|r| &oc[r] * &minv[r][t]).sum();
                col.push(v * &pq);
            }
        }
        cols.push(col);
    }
    for r in 0..cols[0].len() {
        rows.push(
            cols.iter()
                .map(|col| {
                    assert!(col[r].is_integer());
                    col[r].to_integer().to_i64().unwrap()
                })
                .collect(),
        );
    }
    let ker = kernel_mod_p(&rows, 4, pi);
    let mut gens: Vec<Quat> = ker.iter().map(|c| e.element(c)).collect();
    gens.extend(e.basis.iter().map(|b| [&b[0] * &pq, &b[1] * &pq, &b[2] * &pq, &b[3] * &pq]));
    Lattice::from_generators(&gens)
}

/// {y ∈ E : y ∈ L} for a lattice L with pE ⊂ L.
fn intersect_mod_p(e: &Lattice, l: &Lattice, p: u64) -> Lattice {
    let pq = qi(p as i64);
    let rows: Vec<Vec<i64>> = {
        let coords: Vec<Vec<Q>> = e.basis.iter().map(|b| l.coords(b).expect("full rank")).collect();
        (0..4)
            .map(|t| {
                coords
                    .iter()
                    .map(|c| {
                        let v = &c[t] * &pq;
                        assert!(v.is_integer(), "pE must lie in L");
                        v.to_integer().to_i64().unwrap()
                    })
                    .collect()
            })
            .collect()
    };
    let ker = kernel_mod_p(&rows, 4, p as i64);
    let mut gens: Vec<Quat> = ker.iter().map(|c| e.element(c)).collect();
    gens.extend(e.basis.iter().map(|b| [&b[0] * &pq, &b[1] * &pq, &b[2] * &pq, &b[3] * &pq]));
    Lattice::from_generators(&gens)
}

impl EichlerOrderData {
    /// The two-sided ideal J_p of reduced norm p, for p dividing the level.
    pub fn two_sided_ideal(&self, p: u64) -> Result<Lattice> {
        if self.level % p != 0 {
            return Err(Error::Unsupported(format!("{p} does not divide the level {}", self.level)));
        }
        let alg = &self.algebra;
        let o = maximal_order(alg);
        let pq = qi(p as i64);
        let po: Vec<Quat> = o.basis.iter().map(|b| [&b[0] * &pq, &b[1] * &pq, &b[2] * &pq, &b[3] * &pq]).collect();
        let big = if self.m1() % p == 0 {
            // the prime of O above p: xO + pO for any x with nrd(x) exactly divisible by p
            let mut x = None;
            for idx in 1..p.pow(4) {
                let mut c = [0i64; 4];
                let mut t = idx;
                for cs in c.iter_mut() {
                    *cs = (t % p) as i64;
                    t /= p;
                }
                let y = o.element(&c);
                let n = alg.nrd(&y).to_integer();
                let pb = BigInt::from(p);
                if (&n % &pb).is_zero() && !(&n % (&pb * &pb)).is_zero() {
                    x = Some(y);
                    break;
                }
            }
            let x = x.expect("a uniformiser exists at a ramified prime");
            let gens: Vec<Quat> = o.basis.iter().map(|b| alg.mul(&x, b)).chain(po).collect();
            Lattice::from_generators(&gens)
        } else {
            // locally E = O ∩ O' with O, O' adjacent maximal orders, and J_p = p(O + O')
            let o2 = self.adjacent_order(&o, p);
            o.add(&o2).scale(&pq)
        };
        let j = intersect_mod_p(&self.order, &big, p);
        debug_assert_eq!(j.nrd(alg), pq);
        Ok(j)
    }

    /// The maximal order O' ⊃ E with O ∩ O' = E locally at p.
    fn adjacent_order(&self, o: &Lattice, p: u64) -> Lattice {
        let alg = &self.algebra;
        // O' = O_l(xO + pO) for a zero divisor; any maximal order containing E other than O works,
        // and E is contained in exactly two maximal orders locally, so search the p-neighbours of O.
        let pq = qi(p as i64);
        for idx in 1..p.pow(4) {
            let mut c = [0i64; 4];
            let mut t = idx;
            for cs in c.iter_mut() {
                *cs = (t % p) as i64;
                t /= p;
            }
            let x = o.element(&c);
            if !(alg.nrd(&x).to_integer() % BigInt::from(p)).is_zero() {
                continue;
            }
            let gens: Vec<Quat> = o
                .basis
                .iter()
                .map(|b| alg.mul(&x, b))
                .chain(o.basis.iter().map(|b| [&b[0] * &pq, &b[1] * &pq, &b[2] * &pq, &b[3] * &pq]))
                .collect();
            let ideal = Lattice::from_generators(&gens);
            let ol = ideal.mul(alg, &ideal.conj()).scale(&(qi(1) / ideal.nrd(alg)));
            if ol.contains_lattice(&self.order) && ol != *o {
                return ol;
            }
        }
        panic!("no adjacent maximal order found at {p}");
    }
}

/// An Eichler order of the given level in the algebra ramified at the primes of `m1`,
/// together with its right ideal classes.
pub fn eichler_order(m1: u64, level: u64) -> Result<EichlerOrderData> {
    let alg = build_algebra(m1)?;
    eichler_order_in(&alg, level)
}

pub fn eichler_order_in(alg: &QuatAlgebra, level: u64) -> Result<EichlerOrderData> {
    let m1 = alg.disc();
    if level % m1 != 0 {
        return Err(Error::LevelNotDivisible { m1, level });
    }
    if !is_squarefree(level) {
        return Err(Error::Unsupported(format!("level {level} is not squarefree")));
    }
    let o = maximal_order(alg);
    let mut e = o.clone();
    for (p, _) in factor(level / m1) {
        e = eichler_at(alg, &o, &e, p);
    }
    debug_assert_eq!(e.discriminant(alg), qi(level as i64));
    let (classes, norms, units) = ideal_classes(alg, &e, level)?;
    Ok(EichlerOrderData {
        algebra: alg.clone(),
        level,
        order: e,
        ideal_classes: classes,
        ideal_norms: norms,
        unit_halves: units,
    })
}

/// Number of vectors with scaled norm 1 in a lattice whose scaled form has minimum ≥ 1.
fn count_norm_one(alg: &QuatAlgebra, l: &Lattice) -> u64 {
    let g = l.int_gram(alg);
    let mut n = 0;
    for_each_short_vector(&g, 1, |_, _| n += 1);
    n
}

/// True iff the right ideals I and J of the same order are isomorphic (J = αI).
pub fn ideals_isomorphic(alg: &QuatAlgebra, i: &Lattice, ni: &Q, j: &Lattice, nj: &Q) -> bool {
    let l = j.mul(alg, &i.conj());
    // an α ∈ J Ī with nrd(α) = nrd(J) nrd(I) exists iff the scaled form represents 1
    if l.nrd(alg) != ni * nj {
        return false;
    }
    let g = l.int_gram(alg);
    let mut found = false;
    for_each_short_vector(&g, 1, |_, _| found = true);
    found
}

/// q-neighbours of a right ideal I: xE + qI for x ∈ I with q·nrd(I) | nrd(x), x ∉ qI.
fn neighbours(alg: &QuatAlgebra, e: &Lattice, i: &Lattice, ni: &Q, qp: u64) -> Vec<Lattice> {
    let qq = qi(qp as i64);
    let qi_l = i.scale(&qq);
    let mut seen: Vec<Lattice> = Vec::new();
    let target = ni * &qq;
    for idx in 1..qp.pow(4) {
        let mut c = [0i64; 4];
        let mut t = idx;
        for cs in c.iter_mut() {
            *cs = (t % qp) as i64;
            t /= qp;
        }
        let x = i.element(&c);
        let r = alg.nrd(&x) / &target;
        if !r.is_integer() {
            continue;
        }
        let gens: Vec<Quat> = e.basis.iter().map(|b| alg.mul(&x, b)).chain(qi_l.basis.iter().cloned()).collect();
        let j = Lattice::from_generators(&gens);
        if !seen.contains(&j) {
            seen.push(j);
        }
    }
    seen
}

type ClassData = (Vec<Lattice>, Vec<Q>, Vec<u64>);

fn ideal_classes(alg: &QuatAlgebra, e: &Lattice, level: u64) -> Result<ClassData> {
    let m1 = alg.disc();
    let expected = eichler_mass(m1, level);
    let qp = (2u64..).find(|p| crate::arith::is_prime(*p) && level % p != 0).unwrap();
    let mut classes = vec![e.clone()];
    let mut norms = vec![qi(1)];
    let unit_half = |l: &Lattice, n: &Q| -> u64 {
        let ii = l.mul(alg, &l.conj());
        assert_eq!(&ii.nrd(alg), &(n * n));
        count_norm_one(alg, &ii) / 2
    };
    let mut units = vec![unit_half(e, &norms[0])];
    let mut mass: Q = q(1, 2 * units[0] as i64);
    let mut frontier = 0;
    while mass < expected && frontier < classes.len() {
        let (cur, cn) = (classes[frontier].clone(), norms[frontier].clone());
        frontier += 1;
        for j in neighbours(alg, e, &cur, &cn, qp) {
            let nj = j.nrd(alg);
            if classes.iter().zip(&norms).any(|(c, nc)| ideals_isomorphic(alg, c, nc, &j, &nj)) {
                continue;
            }
            let u = unit_half(&j, &nj);
            mass += q(1, 2 * u as i64);
            // keep representatives of small norm by rescaling
            classes.push(j);
            norms.push(nj);
            units.push(u);
            if mass >= expected {
                break;
            }
        }
    }
    if mass != expected {
        return Err(Error::IncompleteClassSet {
            found: mass.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok((classes, norms, units))
}
