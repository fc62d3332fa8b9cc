//! The half-integral weight form h(τ) = Σ c(m) qᵐ cut out of a prime-index
//! Fourier–Jacobi coefficient, and scans of its odd squarefree coefficients.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{factor, is_prime, is_squarefree, q_to_f64, Q};
use crate::error::{Error, Result};
use crate::siegel::{reduce_t, HalfIntMat, JacobiSlice, SiegelCoeffTable};

/// h of weight weight_num/2 on Γ₀(level).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfIntSeries {
    /// Twice the weight: 2(k + 1) − 1 for a Siegel form of weight k + 1.
    pub weight_num: u32,
    pub level: u64,
    /// The Fourier–Jacobi index p.
    pub prime: u64,
    pub c: BTreeMap<i64, Q>,
    pub xmax: i64,
}

impl HalfIntSeries {
    pub fn coeff(&self, m: i64) -> Q {
        self.c.get(&m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.values().all(Zero::is_zero)
    }

    pub fn scaled(&self, s: &Q) -> HalfIntSeries {
        HalfIntSeries { c: self.c.iter().map(|(m, v)| (*m, v * s)).collect(), ..self.clone() }
    }
}

/// The residues 0 ≤ μ ≤ 2p − 1 with μ² ≡ −m (mod 4p).
pub fn mu_residues(m: i64, p: i64) -> Vec<i64> {
    let md = 4 * p;
    (0..2 * p).filter(|mu| (mu * mu + m).rem_euclid(md) == 0).collect()
}

fn index_prime(p: i64, level: u64) -> Result<u64> {
    if p < 2 || !is_prime(p as u64) || level % p as u64 == 0 {
        return Err(Error::Unsupported(format!("index {p} must be a prime not dividing {level}")));
    }
    Ok(p as u64)
}

fn assemble(weight: u32, level: u64, p: u64, xmax: i64, c: Vec<(i64, Q)>) -> HalfIntSeries {
    HalfIntSeries {
        weight_num: 2 * weight - 1,
        level: 4 * p * level,
        prime: p,
        c: c.into_iter().collect(),
        xmax,
    }
}

/// c(m) = Σ_{μ² ≡ −m (4p)} c((m + μ²)/4p, μ) for 1 ≤ m ≤ xmax.
pub fn extract_h(slice: &JacobiSlice, xmax: i64) -> Result<HalfIntSeries> {
    let p = index_prime(slice.index, slice.level)?;
    if xmax > slice.disc_bound {
        return Err(Error::DepthExceeded { requested: xmax, available: slice.disc_bound });
    }
    let pi = p as i64;
    let c: Vec<(i64, Q)> = (1..=xmax)
        .into_par_iter()
        .map(|m| {
            let mut acc = Q::zero();
            for mu in mu_residues(m, pi) {
                acc += slice.get((m + mu * mu) / (4 * pi), mu)?;
            }
            Ok((m, acc))
        })
        .collect::<Result<_>>()?;
    Ok(assemble(slice.weight, slice.level, p, xmax, c))
}

/// The same series computed straight from the coefficient table.
pub fn extract_h_from_table(table: &SiegelCoeffTable, p: u64, xmax: i64) -> Result<HalfIntSeries> {
    index_prime(p as i64, table.level)?;
    let pi = p as i64;
    let mut c = Vec::new();
    for m in 1..=xmax {
        let mut acc = Q::zero();
        for mu in mu_residues(m, pi) {
            acc += table.get(&HalfIntMat::new((m + mu * mu) / (4 * pi), mu, pi)?)?;
        }
        c.push((m, acc));
    }
    Ok(assemble(table.weight, table.level, p, xmax, c))
}

/// ã(n) = a(n) n^{1/4 − κ/2} for a form of weight κ + 1/2. Floating point, diagnostics only.
pub fn normalize(s: &HalfIntSeries) -> Vec<(i64, f64)> {
    let kappa = (s.weight_num as f64 - 1.0) / 2.0;
    s.c.iter().map(|(n, a)| (*n, q_to_f64(a) * (*n as f64).powf(0.25 - kappa / 2.0))).collect()
}

/// Least-squares slope of log|ã(d)| against log d over the nonzero entries listed.
pub fn growth_exponent(normalized: &[(i64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = normalized
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(n, v)| ((*n as f64).ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// A matrix S with −disc S = d and a(F, S) ≠ 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// The residue μ of the single nonzero summand, when there is one.
    pub mu: Option<i64>,
    pub matrix: HalfIntMat,
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanReport {
    pub x: i64,
    pub hits: Vec<i64>,
    pub witness: BTreeMap<i64, Witness>,
}

/// Odd squarefree d ≤ X with c(d) ≠ 0, each with a witness matrix from the table.
pub fn fundamental_scan(s: &HalfIntSeries, table: &SiegelCoeffTable, x: i64) -> Result<ScanReport> {
    if x > s.xmax {
        return Err(Error::DepthExceeded { requested: x, available: s.xmax });
    }
    let p = s.prime as i64;
    let mut hits = Vec::new();
    let mut witness = BTreeMap::new();
    for d in (1..=x).step_by(2) {
        if !is_squarefree(d as u64) || s.coeff(d).is_zero() {
            continue;
        }
        let mut nonzero = Vec::new();
        for mu in mu_residues(d, p) {
            let m = HalfIntMat::new((d + mu * mu) / (4 * p), mu, p)?;
            let v = table.get(&m)?;
            if !v.is_zero() {
                nonzero.push((mu, m, v));
            }
        }
        let w = if nonzero.len() == 1 {
            let (mu, m, v) = nonzero.pop().unwrap();
            Witness { mu: Some(mu), matrix: m, value: v }
        } else {
            let found = table
                .nonzero()
                .find(|(t, _)| t.abs_disc() == d)
                .map(|(t, v)| Witness { mu: None, matrix: *t, value: v.clone() });
            match found {
                Some(w) => w,
                None => return Err(Error::HardFailure(format!("c({d}) ≠ 0 but no coefficient of discriminant −{d} is nonzero"))),
            }
        };
        debug_assert_eq!(reduce_t(&w.matrix)?.0.abs_disc(), d);
        hits.push(d);
        witness.insert(d, w);
    }
    Ok(ScanReport { x, hits, witness })
}

/// A Dirichlet character described by its conductor: χ_p ≠ 1 exactly when p divides it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CharacterDesc {
    pub conductor: u64,
}

impl CharacterDesc {
    pub const TRIVIAL: CharacterDesc = CharacterDesc { conductor: 1 };

    pub fn is_trivial_at(&self, p: u64) -> bool {
        self.conductor % p != 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisCheck {
    pub ok: bool,
    pub reasons: Vec<String>,
}

/// The level and character conditions under which odd squarefree coefficients are
/// guaranteed not to vanish.
pub fn check_thm3_hypotheses(level: u64, chi: CharacterDesc) -> Result<HypothesisCheck> {
    if level % 4 != 0 {
        return Err(Error::NotDivisibleBy4(level));
    }
    let mut reasons = Vec::new();
    if level % 16 == 0 {
        reasons.push(format!("16 divides {level}"));
    } else if level % 8 == 0 && !chi.is_trivial_at(2) {
        reasons.push(format!("8 divides {level} but the 2-part of the character is nontrivial"));
    }
    for (p, e) in factor(level) {
        if p == 2 {
            continue;
        }
        if e >= 3 {
            reasons.push(format!("{p}^3 divides {level}"));
        } else if e == 2 && chi.is_trivial_at(p) {
            reasons.push(format!("{p}^2 divides {level} but the {p}-part of the character is trivial"));
        }
    }
    Ok(HypothesisCheck { ok: reasons.is_empty(), reasons })
}

/// Residues of −m modulo 4p are squares whenever c(m) can be nonzero.
pub fn support_ok(s: &HalfIntSeries) -> bool {
    let p = s.prime as i64;
    s.c.iter().all(|(m, v)| v.is_zero() || !mu_residues(*m, p).is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypothesis_examples() {
        // 4·p·N with N odd squarefree and p an odd prime
        assert!(check_thm3_hypotheses(4 * 5 * 19, CharacterDesc::TRIVIAL).unwrap().ok);
        assert!(!check_thm3_hypotheses(32, CharacterDesc::TRIVIAL).unwrap().ok);
        let r = check_thm3_hypotheses(36, CharacterDesc::TRIVIAL).unwrap();
        assert!(!r.ok && r.reasons[0].contains("3^2"));
        assert!(check_thm3_hypotheses(36, CharacterDesc { conductor: 3 }).unwrap().ok);
        assert!(!check_thm3_hypotheses(4 * 27, CharacterDesc { conductor: 3 }).unwrap().ok);
        assert!(!check_thm3_hypotheses(8, CharacterDesc { conductor: 8 }).unwrap().ok);
        assert!(matches!(check_thm3_hypotheses(6, CharacterDesc::TRIVIAL), Err(Error::NotDivisibleBy4(6))));
    }

    #[test]
    fn residues_follow_the_congruence() {
        // −m must be a square mod 4p; for p = 5, m = 1 gives −1 ≡ 19 (mod 20), not a square
        assert!(mu_residues(1, 5).is_empty());
        assert_eq!(mu_residues(4, 5), vec![4, 6]);
        for m in 1..200 {
            for mu in mu_residues(m, 7) {
                assert_eq!((mu * mu + m) % 28, 0);
            }
        }
    }

    #[test]
    fn normalisation_is_linear() {
        let mut c = BTreeMap::new();
        c.insert(3, Q::from_integer(5.into()));
        c.insert(4, Q::zero());
        let s = HalfIntSeries { weight_num: 7, level: 4 * 5 * 19, prime: 5, c, xmax: 4 };
        let n1 = normalize(&s);
        let n2 = normalize(&s.scaled(&Q::from_integer(2.into())));
        assert_eq!(n1[1].1, 0.0);
        assert!((n2[0].1 - 2.0 * n1[0].1).abs() < 1e-12);
    }
}
