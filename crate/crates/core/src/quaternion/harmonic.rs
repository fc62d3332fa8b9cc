//! Harmonic polynomials of degree ν on the pure quaternions, for the norm form
//! -a y1² - b y2² + ab y3², and the action P ↦ P(x̄ y x).
//!
//! Polynomials carry integer coefficients over a fixed monomial order so the
//! action can be accumulated exactly over millions of lattice vectors.

use std::collections::HashMap;

use num_traits::{ToPrimitive, Zero};

use super::QuatAlgebra;
use crate::arith::linalg::{kernel, rref};
use crate::arith::{common_denominator, qi, Q};

/// Exponent triples of total degree `deg`, in a fixed order.
#[derive(Clone, Debug)]
pub struct Monomials {
    pub deg: u32,
    pub list: Vec<[u32; 3]>,
    index: HashMap<[u32; 3], usize>,
}

impl Monomials {
    pub fn new(deg: u32) -> Self {
        let mut list = Vec::new();
        for i in (0..=deg).rev() {
            for j in (0..=deg - i).rev() {
                list.push([i, j, deg - i - j]);
            }
        }
        let index = list.iter().enumerate().map(|(n, m)| (*m, n)).collect();
        Monomials { deg, list, index }
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn index(&self, m: &[u32; 3]) -> usize {
        self.index[m]
    }
}

/// Space of harmonic polynomials of degree ν with an integral basis normalised at pivot monomials.
#[derive(Clone, Debug)]
pub struct HarmonicSpace {
    pub nu: u32,
    pub form: [i64; 3],
    pub monos: Monomials,
    lower: Vec<Monomials>,
    /// Integer coefficient vectors B_s over `monos`.
    pub basis: Vec<Vec<i128>>,
    /// Monomial index at which B_s has coefficient `pivot_scale[s]` and every other B_t vanishes.
    pub pivots: Vec<usize>,
    pub pivot_scale: Vec<i128>,
}

impl HarmonicSpace {
    pub fn new(alg: &QuatAlgebra, nu: u32) -> Self {
        let form = alg.pure_form();
        let monos = Monomials::new(nu);
        let lower: Vec<Monomials> = (0..=nu).map(Monomials::new).collect();
        let (basis, pivots, pivot_scale) = if nu < 2 {
            let n = monos.len();
            let basis = (0..n).map(|s| (0..n).map(|t| (s == t) as i128).collect()).collect();
            (basis, (0..n).collect(), vec![1; n])
        } else {
            // Δ = Σ (1/c_t) ∂_t², scaled by c1 c2 c3 to be integral.
            let target = Monomials::new(nu - 2);
            let cprod: i64 = form.iter().product();
            let mut lap = vec![vec![Q::zero(); monos.len()]; target.len()];
            for (col, m) in monos.list.iter().enumerate() {
                for t in 0..3 {
                    if m[t] >= 2 {
                        let mut e = *m;
                        e[t] -= 2;
                        let coeff = (m[t] * (m[t] - 1)) as i64 * (cprod / form[t]);
                        lap[target.index(&e)][col] += qi(coeff);
                    }
                }
            }
            let mut echelon = lap.clone();
            let lead = rref(&mut echelon);
            let free: Vec<usize> = (0..monos.len()).filter(|c| !lead.contains(c)).collect();
            let ker = kernel(&lap, monos.len());
            let mut basis = Vec::new();
            let mut pivots = Vec::new();
            let mut scales = Vec::new();
            // each kernel vector is 1 at its own free column and 0 at the other free columns
            for (v, &piv) in ker.into_iter().zip(&free) {
                let den = common_denominator(v.iter());
                let dq = Q::from_integer(den.clone());
                basis.push(v.iter().map(|x| (x * &dq).to_integer().to_i128().unwrap()).collect());
                pivots.push(piv);
                scales.push(den.to_i128().unwrap());
            }
            (basis, pivots, scales)
        };
        HarmonicSpace {
            nu,
            form,
            monos,
            lower,
            basis,
            pivots,
            pivot_scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The 3×3 matrix of y ↦ x̄ y x on (y1, y2, y3) for an integer quaternion x.
    pub fn conjugation_matrix(alg: &QuatAlgebra, x: &[i128; 4]) -> [[i128; 3]; 3] {
        let xb = [x[0], -x[1], -x[2], -x[3]];
        let mut m = [[0i128; 3]; 3];
        for t in 0..3 {
            let mut e = [0i128; 4];
            e[t + 1] = 1;
            let r = alg.mul_int(&alg.mul_int(&xb, &e), x);
            for u in 0..3 {
                m[u][t] = r[u + 1];
            }
        }
        m
    }

    fn mul_polys(&self, a: &[i128], da: u32, b: &[i128], db: u32) -> Vec<i128> {
        let (ma, mb, mc) = (&self.lower[da as usize], &self.lower[db as usize], &self.lower[(da + db) as usize]);
        let mut out = vec![0i128; mc.len()];
        for (i, &ca) in a.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (j, &cb) in b.iter().enumerate() {
                if cb == 0 {
                    continue;
                }
                let (ea, eb) = (ma.list[i], mb.list[j]);
                out[mc.index(&[ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]])] += ca * cb;
            }
        }
        out
    }

    /// Coefficients of P(M y) for a degree-ν polynomial P.
    pub fn substitute(&self, p: &[i128], m: &[[i128; 3]; 3]) -> Vec<i128> {
        let nu = self.nu;
        if nu == 0 {
            return p.to_vec();
        }
        // powers[u][e] = (Σ_t M[u][t] y_t)^e
        let lin = |u: usize| -> Vec<i128> {
            let l1 = &self.lower[1];
            let mut v = vec![0i128; 3];
            for t in 0..3 {
                let mut e = [0u32; 3];
                e[t] = 1;
                v[l1.index(&e)] = m[u][t];
            }
            v
        };
        let mut powers: Vec<Vec<Vec<i128>>> = Vec::with_capacity(3);
        for u in 0..3 {
            let l = lin(u);
            let mut pw = vec![vec![1i128]];
            for e in 1..=nu {
                let next = self.mul_polys(&pw[e as usize - 1], e - 1, &l, 1);
                pw.push(next);
            }
            powers.push(pw);
        }
        let mut out = vec![0i128; self.monos.len()];
        for (idx, &c) in p.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let e = self.monos.list[idx];
            let t = self.mul_polys(&powers[0][e[0] as usize], e[0], &powers[1][e[1] as usize], e[1]);
            let t = self.mul_polys(&t, e[0] + e[1], &powers[2][e[2] as usize], e[2]);
            for (o, v) in out.iter_mut().zip(t) {
                *o += c * v;
            }
        }
        out
    }

    /// Integer matrix R with R[t][s] = (B_s(x̄ y x))[pivot_t]; the true action in the
    /// normalised basis P_s = B_s / pivot_scale[s] is R[t][s] / pivot_scale[s].
    pub fn action_int(&self, alg: &QuatAlgebra, x: &[i128; 4]) -> Vec<i128> {
        let d = self.dim();
        if self.nu == 0 {
            return vec![1];
        }
        let m = Self::conjugation_matrix(alg, x);
        let mut out = vec![0i128; d * d];
        for s in 0..d {
            let img = self.substitute(&self.basis[s], &m);
            for t in 0..d {
                out[t * d + s] = img[self.pivots[t]];
            }
        }
        out
    }

    /// Evaluate B_s at an integer point.
    pub fn eval_basis(&self, s: usize, y: &[i128; 3]) -> i128 {
        self.monos
            .list
            .iter()
            .zip(&self.basis[s])
            .filter(|(_, &c)| c != 0)
            .map(|(e, &c)| c * y[0].pow(e[0]) * y[1].pow(e[1]) * y[2].pow(e[2]))
            .sum()
    }

    /// Monomial coefficients (rational) of Σ_s v_s P_s.
    pub fn combination(&self, v: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.monos.len()];
        for (s, vs) in v.iter().enumerate() {
            if vs.is_zero() {
                continue;
            }
            let f = vs / Q::from_integer(self.pivot_scale[s].into());
            for (o, &c) in out.iter_mut().zip(&self.basis[s]) {
                if c != 0 {
                    *o += &f * Q::from_integer(c.into());
                }
            }
        }
        out
    }

    /// Whether an integer coefficient vector is harmonic.
    pub fn is_harmonic(&self, p: &[i128]) -> bool {
        if self.nu < 2 {
            return true;
        }
        let target = &self.lower[self.nu as usize - 2];
        let cprod: i128 = self.form.iter().map(|&c| c as i128).product();
        let mut out = vec![0i128; target.len()];
        for (col, m) in self.monos.list.iter().enumerate() {
            for t in 0..3 {
                if m[t] >= 2 && p[col] != 0 {
                    let mut e = *m;
                    e[t] -= 2;
                    out[target.index(&e)] += p[col] * (m[t] * (m[t] - 1)) as i128 * (cprod / self.form[t] as i128);
                }
            }
        }
        out.iter().all(|&v| v == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::build_algebra;

    #[test]
    fn dimensions_are_odd() {
        let alg = build_algebra(11).unwrap();
        for nu in 0..=4 {
            assert_eq!(HarmonicSpace::new(&alg, nu).dim(), 2 * nu as usize + 1);
        }
    }

    #[test]
    fn action_preserves_harmonicity() {
        let alg = build_algebra(11).unwrap();
        let hs = HarmonicSpace::new(&alg, 3);
        let x = [3i128, -1, 2, 1];
        let m = HarmonicSpace::conjugation_matrix(&alg, &x);
        for b in &hs.basis {
            assert!(hs.is_harmonic(&hs.substitute(b, &m)));
        }
    }

    #[test]
    fn action_is_multiplicative() {
        let alg = build_algebra(2).unwrap();
        let hs = HarmonicSpace::new(&alg, 2);
        let x = [1i128, 2, 0, -1];
        let y = [0i128, 1, 1, 3];
        let xy = alg.mul_int(&x, &y);
        let d = hs.dim();
        // with unit pivot scales the integer action is the true action
        assert!(hs.pivot_scale.iter().all(|&s| s == 1));
        let (rx, ry, rxy) = (hs.action_int(&alg, &x), hs.action_int(&alg, &y), hs.action_int(&alg, &xy));
        for t in 0..d {
            for s in 0..d {
                let prod: i128 = (0..d).map(|u| rx[t * d + u] * ry[u * d + s]).sum();
                assert_eq!(prod, rxy[t * d + s]);
            }
        }
    }
}
