//! Full-rank Z-lattices in a quaternion algebra and short-vector enumeration.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Quat, QuatAlgebra};
use crate::arith::linalg::{coordinates, det, lattice_basis, QVec};
use crate::arith::{common_denominator, Q};

/// A lattice given by four rows in the basis 1, i, j, k (kept in Hermite normal form).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    pub basis: Vec<Quat>,
}

fn to_vec(x: &Quat) -> QVec {
    x.to_vec()
}

fn to_quat(v: &[Q]) -> Quat {
    [v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()]
}

impl Lattice {
    pub fn from_generators(gens: &[Quat]) -> Lattice {
        let rows: Vec<QVec> = gens.iter().map(to_vec).collect();
        let b = lattice_basis(&rows);
        assert_eq!(b.len(), 4, "generators do not span a full lattice");
        Lattice {
            basis: b.iter().map(|r| to_quat(r)).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> Lattice {
        Lattice::from_generators(&self.basis.iter().map(|x| [&x[0] * s, &x[1] * s, &x[2] * s, &x[3] * s]).collect::<Vec<_>>())
    }

    pub fn conj(&self) -> Lattice {
        Lattice::from_generators(&self.basis.iter().map(QuatAlgebra::conj).collect::<Vec<_>>())
    }

    /// The lattice spanned by all products x y.
    pub fn mul(&self, alg: &QuatAlgebra, other: &Lattice) -> Lattice {
        let mut gens = Vec::with_capacity(16);
        for x in &self.basis {
            for y in &other.basis {
                gens.push(alg.mul(x, y));
            }
        }
        Lattice::from_generators(&gens)
    }

    /// Sum of two lattices.
    pub fn add(&self, other: &Lattice) -> Lattice {
        let gens: Vec<Quat> = self.basis.iter().chain(&other.basis).cloned().collect();
        Lattice::from_generators(&gens)
    }

    pub fn coords(&self, x: &Quat) -> Option<QVec> {
        let rows: Vec<QVec> = self.basis.iter().map(to_vec).collect();
        coordinates(&rows, &x[..])
    }

    pub fn contains(&self, x: &Quat) -> bool {
        self.coords(x).is_some_and(|c| c.iter().all(|t| t.is_integer()))
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        other.basis.iter().all(|x| self.contains(x))
    }

    /// |det| of the basis matrix (covolume relative to Z⟨1,i,j,k⟩).
    pub fn covolume(&self) -> Q {
        let m: Vec<QVec> = self.basis.iter().map(to_vec).collect();
        let d = det(&m);
        if d.is_negative() {
            -d
        } else {
            d
        }
    }

    /// Index [self : sub] for a sublattice.
    pub fn index_of(&self, sub: &Lattice) -> Q {
        sub.covolume() / self.covolume()
    }

    /// The Gram matrix trd(b_s b̄_t).
    pub fn trace_gram(&self, alg: &QuatAlgebra) -> Vec<Vec<Q>> {
        self.basis.iter().map(|x| self.basis.iter().map(|y| alg.pair(x, y)).collect()).collect()
    }

    /// Reduced norm: the positive generator of the fractional ideal spanned by nrd(x), x ∈ L.
    pub fn nrd(&self, alg: &QuatAlgebra) -> Q {
        let g = self.trace_gram(alg);
        let mut vals: Vec<Q> = Vec::new();
        for s in 0..4 {
            vals.push(&g[s][s] / Q::from_integer(BigInt::from(2)));
            for t in s + 1..4 {
                vals.push(g[s][t].clone());
            }
        }
        rational_gcd(&vals)
    }

    /// Reduced discriminant sqrt|det trd(b_s b̄_t)| (meaningful for orders).
    pub fn discriminant(&self, alg: &QuatAlgebra) -> Q {
        let d = det(&self.trace_gram(alg));
        let d = if d.is_negative() { -d } else { d };
        let n = d.numer().sqrt();
        let m = d.denom().sqrt();
        assert_eq!(&n * &n, *d.numer(), "discriminant is not a square");
        assert_eq!(&m * &m, *d.denom(), "discriminant is not a square");
        Q::new(n, m)
    }

    /// Integer Gram matrix G with nrd(x)/nrd(L) = cᵀ G c / 2 for x = Σ c_s b_s.
    pub fn int_gram(&self, alg: &QuatAlgebra) -> [[i64; 4]; 4] {
        let n = self.nrd(alg);
        let g = self.trace_gram(alg);
        let mut out = [[0i64; 4]; 4];
        for s in 0..4 {
            for t in 0..4 {
                let v = &g[s][t] / &n;
                assert!(v.is_integer(), "scaled Gram is not integral");
                out[s][t] = v.to_integer().to_i64().expect("Gram entry overflow");
            }
        }
        out
    }

    /// Basis scaled to integers: (D, rows) with D·b_s having integer coordinates.
    pub fn integral_basis(&self) -> (i128, [[i128; 4]; 4]) {
        let den = common_denominator(self.basis.iter().flatten());
        let dq = Q::from_integer(den.clone());
        let mut rows = [[0i128; 4]; 4];
        for (s, x) in self.basis.iter().enumerate() {
            for t in 0..4 {
                rows[s][t] = (&x[t] * &dq).to_integer().to_i128().expect("basis overflow");
            }
        }
        (den.to_i128().unwrap(), rows)
    }

    /// The element Σ c_s b_s.
    pub fn element(&self, c: &[i64]) -> Quat {
        let mut out: Quat = [Q::zero(), Q::zero(), Q::zero(), Q::zero()];
        for (s, &cs) in c.iter().enumerate() {
            if cs != 0 {
                let f = Q::from_integer(BigInt::from(cs));
                for t in 0..4 {
                    out[t] += &self.basis[s][t] * &f;
                }
            }
        }
        out
    }
}

/// Positive generator of the Z-module spanned by a list of rationals.
pub fn rational_gcd(vals: &[Q]) -> Q {
    let den = common_denominator(vals.iter());
    let dq = Q::from_integer(den.clone());
    let mut g = BigInt::zero();
    for v in vals {
        g = g.gcd(&(v * &dq).to_integer());
    }
    Q::new(g, den)
}

/// Call `f(c, Q(c))` for every nonzero integer vector with Q(c) = cᵀGc/2 ≤ bound.
/// G must be a positive definite integer matrix with even diagonal.
pub fn for_each_short_vector<const N: usize>(gram: &[[i64; N]; N], bound: i64, f: impl FnMut(&[i64; N], i64)) {
    enumerate(gram, bound, None, f)
}

/// Range of the last coordinate over vectors with Q(c) ≤ bound.
pub fn last_coordinate_bound<const N: usize>(gram: &[[i64; N]; N], bound: i64) -> i64 {
    // the last diagonal entry of the inverse of G/2 bounds x_{N−1}² / bound
    let m: Vec<Vec<Q>> = gram.iter().map(|r| r.iter().map(|&v| Q::new(BigInt::from(v), BigInt::from(2))).collect()).collect();
    let inv = crate::arith::linalg::inverse(&m).expect("positive definite Gram matrix");
    let t = crate::arith::q_to_f64(&inv[N - 1][N - 1]) * bound as f64;
    t.sqrt().floor() as i64 + 1
}

/// As [`for_each_short_vector`], restricted to vectors whose last coordinate equals `last`.
pub fn for_each_short_vector_with_last<const N: usize>(gram: &[[i64; N]; N], bound: i64, last: i64, f: impl FnMut(&[i64; N], i64)) {
    enumerate(gram, bound, Some(last), f)
}

fn enumerate<const N: usize>(gram: &[[i64; N]; N], bound: i64, top: Option<i64>, mut f: impl FnMut(&[i64; N], i64)) {
    if bound <= 0 {
        return;
    }
    // Q(x) = Σ_i q_ii (x_i + Σ_{j>i} q_ij x_j)²
    let mut q = [[0f64; N]; N];
    for i in 0..N {
        for j in 0..N {
            q[i][j] = gram[i][j] as f64 / 2.0;
        }
    }
    for i in 0..N {
        for j in i + 1..N {
            q[j][i] = q[i][j];
            q[i][j] /= q[i][i];
        }
        for k in i + 1..N {
            for l in k..N {
                q[k][l] -= q[k][i] * q[i][l];
            }
        }
    }
    let eps = 1e-7 * (1.0 + bound as f64);
    let mut x = [0i64; N];
    let mut t = [0f64; N];
    let mut u = [0f64; N];
    let mut ub = [0i64; N];
    let mut i = N - 1;
    t[i] = bound as f64;
    u[i] = 0.0;
    let init = |i: usize, t: &[f64; N], u: &[f64; N], x: &mut [i64; N], ub: &mut [i64; N]| {
        let z = (t[i].max(0.0) / q[i][i]).sqrt() + eps;
        ub[i] = (z - u[i]).floor() as i64;
        x[i] = (-z - u[i]).ceil() as i64 - 1;
    };
    init(i, &t, &u, &mut x, &mut ub);
    if let Some(v) = top {
        if v < x[i] + 1 || v > ub[i] {
            return;
        }
        x[i] = v - 1;
        ub[i] = v;
    }
    loop {
        x[i] += 1;
        if x[i] > ub[i] {
            if i == N - 1 {
                break;
            }
            i += 1;
            continue;
        }
        if i > 0 {
            let d = x[i] as f64 + u[i];
            t[i - 1] = t[i] - q[i][i] * d * d;
            i -= 1;
            u[i] = (i + 1..N).map(|j| q[i][j] * x[j] as f64).sum();
            init(i, &t, &u, &mut x, &mut ub);
        } else {
            if x.iter().all(|&v| v == 0) {
                continue;
            }
            let mut s = 0i64;
            for a in 0..N {
                if x[a] == 0 {
                    continue;
                }
                let mut r = 0i64;
                for b in 0..N {
                    r += gram[a][b] * x[b];
                }
                s += x[a] * r;
            }
            let val = s / 2;
            if val <= bound {
                f(&x, val);
            }
        }
    }
}

/// Some vector with Q(c) = target, if one exists.
pub fn find_vector<const N: usize>(gram: &[[i64; N]; N], target: i64) -> Option<[i64; N]> {
    let mut found = None;
    for_each_short_vector(gram, target, |c, v| {
        if v == target && found.is_none() {
            found = Some(*c);
        }
    });
    found
}

/// Number of vectors of each norm 0..=bound (index 0 counts the zero vector).
pub fn theta_counts<const N: usize>(gram: &[[i64; N]; N], bound: i64) -> Vec<u64> {
    let mut out = vec![0u64; bound as usize + 1];
    out[0] = 1;
    for_each_short_vector(gram, bound, |_, v| out[v as usize] += 1);
    out
}

/// Integer-coordinate quaternion D·x for x = Σ c_s b_s.
#[inline]
pub fn int_element(rows: &[[i128; 4]; 4], c: &[i64; 4]) -> [i128; 4] {
    let mut out = [0i128; 4];
    for s in 0..4 {
        let cs = c[s] as i128;
        if cs != 0 {
            for t in 0..4 {
                out[t] += cs * rows[s][t];
            }
        }
    }
    out
}

pub fn is_one(q: &Q) -> bool {
    q.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_z4_shells() {
        // Σ x_i² has r_4(n) = 8 Σ_{d|n, 4∤d} d
        let g = [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [0, 0, 0, 2]];
        let th = theta_counts(&g, 12);
        let r4 = |n: u64| 8 * (1..=n).filter(|d| n % d == 0 && d % 4 != 0).sum::<u64>();
        for n in 1..=12 {
            assert_eq!(th[n as usize], r4(n), "n={n}");
        }
    }

    #[test]
    fn enumerates_skew_forms() {
        // A2 ⊕ A2: x² + xy + y² twice; brute-force oracle.
        let g = [[2, 1, 0, 0], [1, 2, 0, 0], [0, 0, 2, -1], [0, 0, -1, 2]];
        let th = theta_counts(&g, 9);
        let mut brute = vec![0u64; 10];
        for a in -4i64..=4 {
            for b in -4i64..=4 {
                for c in -4i64..=4 {
                    for d in -4i64..=4 {
                        let v = a * a + a * b + b * b + c * c - c * d + d * d;
                        if v <= 9 {
                            brute[v as usize] += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(th, brute);
    }
}
