//! Degree-four L-functions L(s, f × θ_χ) and a general smoothed approximate functional
//! equation for evaluating them.
//!
//! Local Euler factors are computed exactly in Q(ζ_h); the series used numerically is
//! in the unitary normalisation, where the critical line is Re s = 1/2.

mod afe;
pub mod gamma;

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{gcd_i64, kronecker, primes_up_to, q128, qi, Cyclo};
use crate::classfield::{reduce_form, ClassCharacter, ClassGroup, QuadForm};
use crate::error::{Error, Result};

pub use afe::{
    afe_eval, fe_residual, required_terms, smoother_by_name, smoother_registry, solve_sign, AfeEngine, AfeParams, CentralValue, Cosine,
    Gauss, Plain, Smoother,
};

/// Λ(s) = Q^{s/2} Π Γ_R(s + μ_j) L(s) = ε Λ̄(1 − s), with L(s) = Σ b(n) n^{−s}.
#[derive(Clone, Debug, Serialize)]
pub struct LData {
    pub label: String,
    /// b(n) for n = 0..=nmax; b(0) is unused.
    #[serde(skip)]
    pub coeffs: Vec<Complex64>,
    pub gamma_shifts: Vec<f64>,
    pub conductor: f64,
    /// Root number when known in advance; otherwise solved for numerically.
    #[serde(skip)]
    pub sign: Option<Complex64>,
    /// Pairs (C, θ) with |b(n)| ≤ C n^θ for all n, used for the truncation bound.
    pub coeff_bound: Vec<(f64, f64)>,
}

impl LData {
    pub fn nmax(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn degree(&self) -> usize {
        self.gamma_shifts.len()
    }

    pub fn is_self_dual(&self) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= 1e-12 * c.re.abs().max(1.0))
    }

    /// The dual coefficients b̄(n).
    pub fn dual(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.conj()).collect()
    }

    /// L(s, χ_D) for a fundamental discriminant D, with |b(n)| ≤ 1 and ε = 1.
    pub fn kronecker(disc: i64, nmax: usize) -> LData {
        let coeffs = (0..=nmax)
            .map(|n| if n == 0 { Complex64::new(0.0, 0.0) } else { Complex64::new(kronecker(disc, n as u64) as f64, 0.0) })
            .collect();
        LData {
            label: format!("chi_{disc}"),
            coeffs,
            gamma_shifts: vec![if disc < 0 { 1.0 } else { 0.0 }],
            conductor: disc.unsigned_abs() as f64,
            sign: Some(Complex64::new(1.0, 0.0)),
            coeff_bound: vec![(1.0, 0.0)],
        }
    }
}

/// Gamma shifts and conductor of L(s, f × θ_χ) for f of weight w and level N and θ_χ of
/// level d: Γ_C(s + (w−1)/2)², written as four Γ_R factors, and Q = (Nd)².
pub fn gamma_conductor(weight: u32, level: u64, d: u64) -> Result<(Vec<f64>, f64)> {
    if gcd_i64(level as i64, d as i64) != 1 {
        return Err(Error::RamifiedOverlap { level, d });
    }
    let mu = (weight as f64 - 1.0) / 2.0;
    let q = (level as f64 * d as f64).powi(2);
    Ok((vec![mu, mu + 1.0, mu, mu + 1.0], q))
}

/// Class of a prime ideal above p, for p split or ramified in Q(√−d).
fn prime_class(g: &ClassGroup, p: u64) -> Result<usize> {
    let d = g.disc.0 as i64;
    let pi = p as i64;
    let b = (0..2 * pi)
        .find(|b| (b * b + d).rem_euclid(4 * pi) == 0)
        .ok_or_else(|| Error::HardFailure(format!("{p} does not split in Q(√−{d})")))?;
    let f = reduce_form(&QuadForm { a: pi, b, c: (b * b + d) / (4 * pi) })?;
    g.index_of(&f).ok_or_else(|| Error::HardFailure(format!("form {f} not in the class group")))
}

fn series_inverse(poly: &[Cyclo], len: usize) -> Vec<Cyclo> {
    let n = poly[0].order();
    let mut out: Vec<Cyclo> = Vec::with_capacity(len);
    for e in 0..len {
        if e == 0 {
            out.push(Cyclo::one(n));
            continue;
        }
        let mut acc = Cyclo::zero(n);
        for j in 1..poly.len().min(e + 1) {
            acc = &acc - &(&poly[j] * &out[e - j]);
        }
        out.push(acc);
    }
    out
}

fn poly_mul(a: &[Cyclo], b: &[Cyclo]) -> Vec<Cyclo> {
    let n = a[0].order();
    let mut out = vec![Cyclo::zero(n); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

const D4_EXPONENTS: [f64; 4] = [0.25, 0.375, 0.5, 0.75];

/// C with d₄(n) ≤ C n^θ for every n ≥ 1, where d₄(n) = Π C(e+3, 3) counts ordered
/// factorisations into four parts.
///
/// Multiplicativity reduces this to prime powers; for p ≥ 4^{1/θ} every factor
/// C(e+3, 3)/p^{eθ} is at most 1, so C is the product of the per-prime maxima below that.
pub fn d4_constant(theta: f64) -> f64 {
    let limit = 4f64.powf(1.0 / theta).ceil() as u64;
    primes_up_to(limit)
        .into_iter()
        .map(|p| {
            (0..200u32)
                .map(|e| {
                    let e = e as f64;
                    (e + 1.0) * (e + 2.0) * (e + 3.0) / 6.0 / (p as f64).powf(e * theta)
                })
                .fold(1.0, f64::max)
        })
        .product()
}

/// Power series of the local factor at each prime p ≤ nmax, up to the largest p^e ≤ nmax,
/// in the arithmetic normalisation A(p) = a_f(p) r_χ(p).
fn local_factors(af: &[i128], weight: u32, level: u64, g: &ClassGroup, chi: &ClassCharacter, nmax: usize) -> Result<Vec<(u64, Vec<Cyclo>)>> {
    let d = g.disc.0;
    if gcd_i64(level as i64, d as i64) != 1 {
        return Err(Error::RamifiedOverlap { level, d });
    }
    if af.len() <= nmax {
        return Err(Error::DepthExceeded { requested: nmax as i64, available: af.len() as i64 - 1 });
    }
    let h = chi.h;
    let c = |x: i128| Cyclo::from_rational(h, q128(x));
    let one = Cyclo::one(h);
    let mut local = Vec::new();
    for p in primes_up_to(nmax as u64) {
        let mut len = 1usize;
        let mut pe = p;
        while pe <= nmax as u64 {
            len += 1;
            pe *= p;
        }
        let a = af[p as usize];
        let bad = level % p == 0;
        let pw = (p as i128).pow(weight - 1);
        let poly: Vec<Cyclo> = match kronecker(-(d as i64), p) {
            // split: θ-parameters χ(P), χ(P̄)
            1 => {
                let x = chi.eval(prime_class(g, p)?);
                let factor = |z: &Cyclo| -> Vec<Cyclo> {
                    let lin = -&(&c(a) * z);
                    if bad {
                        vec![one.clone(), lin]
                    } else {
                        vec![one.clone(), lin, &c(pw) * &(z * z)]
                    }
                };
                poly_mul(&factor(&x), &factor(&x.conj()))
            }
            // inert: θ-parameters ±1, a factor in p^{−2s}
            -1 => {
                if bad {
                    vec![one.clone(), Cyclo::zero(h), c(-a * a)]
                } else {
                    // The p^{-4s} term survives truncation only for small p, and p^{2(w-1)} overflows i128 for large p.
                    let top = if len > 4 { c(pw * pw) } else { Cyclo::zero(h) };
                    vec![one.clone(), Cyclo::zero(h), c(2 * pw - a * a), Cyclo::zero(h), top]
                }
            }
            // ramified: the single parameter χ(P) = ±1
            _ => {
                let x = chi.eval(prime_class(g, p)?);
                vec![one.clone(), -&(&c(a) * &x), c(pw)]
            }
        };
        local.push((p, series_inverse(&poly, len)));
    }
    Ok(local)
}

/// n ↦ (p, e, n / p^e) for the smallest prime p | n.
fn smallest_prime_split(nmax: usize) -> Vec<(usize, usize, usize)> {
    let mut spf = vec![0usize; nmax + 1];
    for i in 2..=nmax {
        if spf[i] == 0 {
            let mut k = i;
            while k <= nmax {
                if spf[k] == 0 {
                    spf[k] = i;
                }
                k += i;
            }
        }
    }
    (0..=nmax)
        .map(|m| {
            if m < 2 {
                return (0, 0, m);
            }
            let p = spf[m];
            let (mut q, mut e) = (m, 0);
            while q % p == 0 {
                q /= p;
                e += 1;
            }
            (p, e, q)
        })
        .collect()
}

/// Coefficients A(n), n ≤ nmax, of L(s, f × θ_χ) in the arithmetic normalisation,
/// exactly, from the local Euler factors.
///
/// `af` holds a_f(0..=nmax) for a newform of weight w and level N with gcd(N, d) = 1.
pub fn rankin_coeffs(af: &[i128], weight: u32, level: u64, g: &ClassGroup, chi: &ClassCharacter, nmax: usize) -> Result<Vec<Cyclo>> {
    let local = local_factors(af, weight, level, g, chi, nmax)?;
    let index: HashMap<usize, usize> = local.iter().enumerate().map(|(i, (p, _))| (*p as usize, i)).collect();
    let mut out = vec![Cyclo::zero(chi.h); nmax + 1];
    if nmax >= 1 {
        out[1] = Cyclo::one(chi.h);
    }
    for (m, (p, e, q)) in smallest_prime_split(nmax).into_iter().enumerate().skip(2) {
        let pe = &local[index[&p]].1[e];
        out[m] = if q == 1 { pe.clone() } else { pe * &out[q] };
    }
    Ok(out)
}

/// L(s, f × θ_χ) in the unitary normalisation, b(n) = A(n) / n^{(w−1)/2}.
///
/// The local factors are exact; prime powers are flattened to complex numbers before the
/// multiplicative assembly, which keeps long series cheap.
pub fn rankin_ldata(af: &[i128], weight: u32, level: u64, g: &ClassGroup, chi: &ClassCharacter, nmax: usize) -> Result<LData> {
    let local = local_factors(af, weight, level, g, chi, nmax)?;
    let half = (weight as f64 - 1.0) / 2.0;
    let flat: HashMap<usize, Vec<Complex64>> = local
        .iter()
        .map(|(p, ser)| {
            let v = ser.iter().enumerate().map(|(e, a)| a.to_complex() / (*p as f64).powf(half * e as f64)).collect();
            (*p as usize, v)
        })
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); nmax + 1];
    if nmax >= 1 {
        coeffs[1] = Complex64::new(1.0, 0.0);
    }
    for (m, (p, e, q)) in smallest_prime_split(nmax).into_iter().enumerate().skip(2) {
        coeffs[m] = flat[&p][e] * coeffs[q];
    }
    let mut l = rankin_shape(weight, level, g.disc.0)?;
    l.label = format!("f{weight}.{level} x theta(-{}, {:?})", g.disc.0, chi.values);
    l.coeffs = coeffs;
    Ok(l)
}

/// Everything about L(s, f × θ_χ) except the coefficients, which are left empty. Enough to
/// size the truncation before any coefficient is computed.
pub fn rankin_shape(weight: u32, level: u64, d: u64) -> Result<LData> {
    let (gamma_shifts, conductor) = gamma_conductor(weight, level, d)?;
    Ok(LData {
        label: format!("f{weight}.{level} x theta(-{d})"),
        coeffs: Vec::new(),
        gamma_shifts,
        conductor,
        sign: None,
        // four unitary local parameters at good primes, fewer and smaller at bad ones
        coeff_bound: D4_EXPONENTS.iter().map(|&t| (d4_constant(t), t)).collect(),
    })
}

/// The naive convolution Σ_{m² l = n} χ_{−d}(m) m^{w−1} 1_{(m,N)=1} a_f(l) r_χ(l): the same
/// coefficients obtained without Euler factors.
pub fn rankin_by_convolution(af: &[i128], weight: u32, level: u64, d: u64, r: &[Cyclo], nmax: usize) -> Vec<Cyclo> {
    let h = r[1].order();
    let mut out = vec![Cyclo::zero(h); nmax + 1];
    for m in 1..=nmax {
        if m * m > nmax {
            break;
        }
        let chi = kronecker(-(d as i64), m as u64) as i64;
        if chi == 0 || gcd_i64(m as i64, level as i64) != 1 {
            continue;
        }
        let w = qi(chi) * q128((m as i128).pow(weight - 1));
        for l in 1..=nmax / (m * m) {
            let t = r[l].scale(&(&w * q128(af[l])));
            out[m * m * l] = &out[m * m * l] + &t;
        }
    }
    out
}
