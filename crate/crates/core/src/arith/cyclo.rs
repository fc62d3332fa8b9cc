//! Elements of the cyclotomic field Q(ζ_n), stored in the power basis
//! 1, ζ, …, ζ^{φ(n)-1} modulo the n-th cyclotomic polynomial. Zero tests are exact.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::{q_to_f64, qi, Q};

fn cyclotomic_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<i64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<i64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients (constant term first) of the n-th cyclotomic polynomial.
pub fn cyclotomic_poly(n: u32) -> Arc<Vec<i64>> {
    if let Some(p) = cyclotomic_cache().lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Φ_d for every proper divisor d of n.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_poly(d);
            num = poly_div_exact(&num, &phi_d);
        }
    }
    let arc = Arc::new(num);
    cyclotomic_cache().lock().unwrap().insert(n, arc.clone());
    arc
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead = *den.last().unwrap();
    let qlen = rem.len() - dd;
    let mut quo = vec![0i64; qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dd] / lead;
        quo[i] = c;
        for (j, &dj) in den.iter().enumerate() {
            rem[i + j] -= c * dj;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    quo
}

/// Euler totient.
pub fn totient(n: u32) -> u32 {
    super::factor(n as u64)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p as u32 * (p as u32 - 1))
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyclo {
    n: u32,
    coeffs: Vec<Q>,
}

impl Cyclo {
    pub fn zero(n: u32) -> Self {
        Cyclo {
            n,
            coeffs: vec![Q::zero(); totient(n) as usize],
        }
    }

    pub fn from_rational(n: u32, x: Q) -> Self {
        let mut c = Self::zero(n);
        c.coeffs[0] = x;
        c
    }

    pub fn one(n: u32) -> Self {
        Self::from_rational(n, Q::one())
    }

    /// ζ_n^e for any integer e.
    pub fn root_power(n: u32, e: i64) -> Self {
        let e = e.rem_euclid(n as i64) as usize;
        let mut raw = vec![Q::zero(); e + 1];
        raw[e] = Q::one();
        Self::reduce(n, raw)
    }

    fn reduce(n: u32, mut raw: Vec<Q>) -> Self {
        let phi = cyclotomic_poly(n);
        let deg = phi.len() - 1;
        if raw.len() > deg {
            for i in (deg..raw.len()).rev() {
                if raw[i].is_zero() {
                    continue;
                }
                let c = raw[i].clone();
                // Φ_n is monic: x^deg = -Σ φ_j x^j.
                for (j, &pj) in phi.iter().enumerate().take(deg) {
                    if pj != 0 {
                        raw[i - deg + j] -= &c * qi(pj);
                    }
                }
                raw[i] = Q::zero();
            }
        }
        raw.resize(deg, Q::zero());
        Cyclo { n, coeffs: raw }
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The rational value if the element lies in Q.
    pub fn as_rational(&self) -> Option<Q> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn scale(&self, s: &Q) -> Self {
        Cyclo {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Complex conjugation ζ ↦ ζ^{-1}.
    pub fn conj(&self) -> Self {
        let n = self.n as usize;
        let mut raw = vec![Q::zero(); n];
        for (t, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                raw[(n - t) % n] += c;
            }
        }
        Self::reduce(self.n, raw)
    }

    pub fn to_complex(&self) -> Complex64 {
        let mut z = Complex64::new(0.0, 0.0);
        let w = 2.0 * std::f64::consts::PI / self.n as f64;
        for (t, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                z += Complex64::from_polar(1.0, w * t as f64) * q_to_f64(c);
            }
        }
        z
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.n, other.n, "cyclotomic orders differ");
    }
}

impl Add for &Cyclo {
    type Output = Cyclo;
    fn add(self, o: &Cyclo) -> Cyclo {
        self.check(o);
        Cyclo {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Cyclo {
    type Output = Cyclo;
    fn sub(self, o: &Cyclo) -> Cyclo {
        self.check(o);
        Cyclo {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        Cyclo {
            n: self.n,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul for &Cyclo {
    type Output = Cyclo;
    fn mul(self, o: &Cyclo) -> Cyclo {
        self.check(o);
        let mut raw = vec![Q::zero(); self.coeffs.len() + o.coeffs.len()];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    raw[i + j] += a * b;
                }
            }
        }
        Cyclo::reduce(self.n, raw)
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (t, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match t {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "({})*z{}", c, self.n)?,
                _ => write!(f, "({})*z{}^{}", c, self.n, t)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(*cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(*cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(*cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(*cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_of_unity_sum_to_zero() {
        for n in [2u32, 3, 4, 5, 6, 8, 9, 12, 15] {
            let mut s = Cyclo::zero(n);
            for e in 0..n as i64 {
                s = &s + &Cyclo::root_power(n, e);
            }
            assert!(s.is_zero(), "n={n}");
            let z = Cyclo::root_power(n, 1);
            let mut p = Cyclo::one(n);
            for _ in 0..n {
                p = &p * &z;
            }
            assert_eq!(p, Cyclo::one(n));
        }
    }

    #[test]
    fn conjugation_is_inverse_on_roots() {
        let z = Cyclo::root_power(7, 3);
        assert_eq!(&z * &z.conj(), Cyclo::one(7));
        let w = Cyclo::root_power(3, 1);
        assert_eq!((&w + &w.conj()).as_rational(), Some(qi(-1)));
    }
}
