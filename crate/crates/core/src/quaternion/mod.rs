//! Definite quaternion algebras over Q and the arithmetic needed to realise
//! modular forms on them: Eichler orders, right ideal classes, Brandt matrices
//! in scalar and harmonic weight, and Hecke eigensystems.

pub mod brandt;
pub mod eigen;
pub mod harmonic;
pub mod lattice;
pub mod order;
pub mod qexp;

use num_traits::{One, Zero};

use crate::arith::{factor, is_squarefree, kronecker, prime_divisors, qi, Q};
use crate::error::{Error, Result};

pub use brandt::{brandt, BrandtSystem, ThetaKernel};
pub use eigen::{eigensystems, select_pair, EigenSystem, PairCandidate};
pub use lattice::Lattice;
pub use order::{eichler_order, EichlerOrderData};

/// An element x0 + x1 i + x2 j + x3 k.
pub type Quat = [Q; 4];

/// The algebra (a, b | Q): i² = a, j² = b, ij = -ji = k, with a, b < 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuatAlgebra {
    pub a: i64,
    pub b: i64,
    /// Finite ramified primes, increasing.
    pub ramified: Vec<u64>,
}

/// Hilbert symbol (a, b)_p for a prime p, or p = 0 meaning the real place.
pub fn hilbert_symbol(a: i64, b: i64, p: u64) -> i32 {
    assert!(a != 0 && b != 0);
    if p == 0 {
        return if a < 0 && b < 0 { -1 } else { 1 };
    }
    let split = |mut x: i64| {
        let mut e = 0u32;
        while x % p as i64 == 0 {
            x /= p as i64;
            e += 1;
        }
        (e, x)
    };
    let (alpha, u) = split(a);
    let (beta, v) = split(b);
    if p == 2 {
        let eps = |x: i64| ((x - 1) / 2).rem_euclid(2);
        let omega = |x: i64| ((x * x - 1) / 8).rem_euclid(2);
        let e = eps(u) * eps(v) + alpha as i64 * omega(v) + beta as i64 * omega(u);
        if e % 2 == 0 {
            1
        } else {
            -1
        }
    } else {
        let mut s = if (alpha as u64 * beta as u64 * ((p - 1) / 2)) % 2 == 0 { 1 } else { -1 };
        if beta % 2 == 1 {
            s *= kronecker(u, p);
        }
        if alpha % 2 == 1 {
            s *= kronecker(v, p);
        }
        s
    }
}

impl QuatAlgebra {
    /// Finite primes at which (a, b) is ramified.
    pub fn ramified_primes(a: i64, b: i64) -> Vec<u64> {
        let mut cands = prime_divisors((2 * a * b).unsigned_abs());
        cands.sort_unstable();
        cands.into_iter().filter(|&p| hilbert_symbol(a, b, p) == -1).collect()
    }

    pub fn disc(&self) -> u64 {
        self.ramified.iter().product()
    }

    pub fn mul(&self, x: &Quat, y: &Quat) -> Quat {
        let (a, b) = (qi(self.a), qi(self.b));
        let ab = &a * &b;
        [
            &x[0] * &y[0] + &a * &x[1] * &y[1] + &b * &x[2] * &y[2] - &ab * &x[3] * &y[3],
            &x[0] * &y[1] + &x[1] * &y[0] - &b * &x[2] * &y[3] + &b * &x[3] * &y[2],
            &x[0] * &y[2] + &x[2] * &y[0] + &a * &x[1] * &y[3] - &a * &x[3] * &y[1],
            &x[0] * &y[3] + &x[3] * &y[0] + &x[1] * &y[2] - &x[2] * &y[1],
        ]
    }

    /// Product of integer coordinate vectors.
    #[inline]
    pub fn mul_int(&self, x: &[i128; 4], y: &[i128; 4]) -> [i128; 4] {
        let (a, b) = (self.a as i128, self.b as i128);
        [
            x[0] * y[0] + a * x[1] * y[1] + b * x[2] * y[2] - a * b * x[3] * y[3],
            x[0] * y[1] + x[1] * y[0] - b * x[2] * y[3] + b * x[3] * y[2],
            x[0] * y[2] + x[2] * y[0] + a * x[1] * y[3] - a * x[3] * y[1],
            x[0] * y[3] + x[3] * y[0] + x[1] * y[2] - x[2] * y[1],
        ]
    }

    pub fn conj(x: &Quat) -> Quat {
        [x[0].clone(), -x[1].clone(), -x[2].clone(), -x[3].clone()]
    }

    pub fn nrd(&self, x: &Quat) -> Q {
        let (a, b) = (qi(self.a), qi(self.b));
        &x[0] * &x[0] - &a * &x[1] * &x[1] - &b * &x[2] * &x[2] + &a * &b * &x[3] * &x[3]
    }

    pub fn trd(x: &Quat) -> Q {
        &x[0] * qi(2)
    }

    /// trd(x ȳ), the bilinear form with trd(x x̄) = 2 nrd(x).
    pub fn pair(&self, x: &Quat, y: &Quat) -> Q {
        let (a, b) = (qi(self.a), qi(self.b));
        qi(2) * (&x[0] * &y[0] - &a * &x[1] * &y[1] - &b * &x[2] * &y[2] + &a * &b * &x[3] * &y[3])
    }

    /// Coefficients of the norm form on pure quaternions y1 i + y2 j + y3 k.
    pub fn pure_form(&self) -> [i64; 3] {
        [-self.a, -self.b, self.a * self.b]
    }

    pub fn one() -> Quat {
        [Q::one(), Q::zero(), Q::zero(), Q::zero()]
    }

    pub fn is_integral(&self, x: &Quat) -> bool {
        Self::trd(x).is_integer() && self.nrd(x).is_integer()
    }
}

/// The definite algebra ramified exactly at ∞ and the primes dividing `m1`.
pub fn build_algebra(m1: u64) -> Result<QuatAlgebra> {
    if m1 == 0 || !is_squarefree(m1) {
        return Err(Error::Unsupported(format!("ramified product {m1} must be squarefree")));
    }
    let target: Vec<u64> = factor(m1).into_iter().map(|(p, _)| p).collect();
    if target.len() % 2 == 0 {
        return Err(Error::EvenRamification(m1));
    }
    let bound = 8 * m1 as i64 + 64;
    for nb in 1..=bound {
        for na in 1..=nb {
            let (a, b) = (-na, -nb);
            if QuatAlgebra::ramified_primes(a, b) == target {
                return Ok(QuatAlgebra {
                    a,
                    b,
                    ramified: target,
                });
            }
        }
    }
    Err(Error::HardFailure(format!("no Hilbert pair found for {m1}")))
}
