//! Bessel-period sums over the class group of Q(√−d), and the check that a nonzero sum
//! forces both twisted central values L(½, f × θ_χ⁻¹) and L(½, g × θ_χ⁻¹) off zero.
//!
//! The classical sum B_χ = Σ_c χ(c)⁻¹ a(F, S_c) is kept exact in Q(ζ_h). The global
//! constant r and the factor e^{−2π tr S} in front of it are dropped: both are nonzero and
//! only vanishing matters downstream.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd_i64, is_squarefree, Cyclo, Q};
use crate::classfield::{characters, class_group, is_fundamental, ClassCharacter, ClassGroup};
use crate::error::{Error, Result};
use crate::lfunc::{rankin_ldata, AfeEngine, AfeParams, CentralValue};
use crate::siegel::{HalfIntMat, SiegelCoeffTable};

/// S(−d): (d/4, 0; 0, 1) for d ≡ 0 and ((1 + d)/4, 1/2; 1/2, 1) for d ≡ 3 mod 4.
pub fn s_matrix(d: u64) -> Result<HalfIntMat> {
    let di = d as i64;
    match d % 4 {
        0 => HalfIntMat::new(di / 4, 0, 1),
        3 => HalfIntMat::new((1 + di) / 4, 1, 1),
        _ => Err(Error::BadResidue(d)),
    }
}

/// One matrix of discriminant −d per class, in the order of the group's elements.
pub fn s_c_reps(g: &ClassGroup) -> Vec<(usize, HalfIntMat)> {
    g.elements.iter().enumerate().map(|(i, f)| (i, HalfIntMat::from(*f))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BesselReport {
    pub d: u64,
    pub h: usize,
    /// a(F, S_c) for each class c.
    pub coeffs: Vec<Q>,
    /// B_χ for each character index, with r and e^{−2π tr S} omitted.
    pub per_chi: Vec<Cyclo>,
}

impl BesselReport {
    pub fn nonzero_chars(&self) -> Vec<usize> {
        (0..self.per_chi.len()).filter(|&i| !self.per_chi[i].is_zero()).collect()
    }

    pub fn any_coeff_nonzero(&self) -> bool {
        self.coeffs.iter().any(|a| !a.is_zero())
    }

    /// a(F, S_c) = (1/h) Σ_χ χ(c) B_χ.
    pub fn invert(&self, chars: &[ClassCharacter]) -> Vec<Cyclo> {
        let n = self.per_chi.first().map_or(1, Cyclo::order);
        let inv_h = Q::new(1.into(), (self.h as i64).into());
        (0..self.h)
            .map(|c| {
                chars
                    .iter()
                    .zip(&self.per_chi)
                    .fold(Cyclo::zero(n), |acc, (chi, b)| &acc + &(&chi.eval(c) * b))
                    .scale(&inv_h)
            })
            .collect()
    }
}

/// Σ_χ |B_χ|² and h Σ_c a(F, S_c)², both exact.
pub fn parseval_sides(r: &BesselReport) -> (Cyclo, Cyclo) {
    let n = r.per_chi.first().map_or(1, Cyclo::order);
    let lhs = r.per_chi.iter().fold(Cyclo::zero(n), |acc, b| &acc + &(b * &b.conj()));
    let sq: Q = r.coeffs.iter().map(|a| a * a).sum();
    let rhs = Cyclo::from_rational(n, sq * Q::from_integer((r.h as i64).into()));
    (lhs, rhs)
}

pub fn bessel_sums(table: &SiegelCoeffTable, d: u64) -> Result<BesselReport> {
    let g = class_group(d, false)?;
    bessel_sums_for(table, &g, &characters(&g))
}

pub(crate) fn bessel_sums_for(table: &SiegelCoeffTable, g: &ClassGroup, chars: &[ClassCharacter]) -> Result<BesselReport> {
    let d = g.disc.0;
    if d as i64 > table.disc_bound {
        return Err(Error::DepthExceeded { requested: d as i64, available: table.disc_bound });
    }
    let coeffs = s_c_reps(g).iter().map(|(_, s)| table.get(s)).collect::<Result<Vec<_>>>()?;
    let n = g.h() as u32;
    let per_chi = chars
        .iter()
        .map(|chi| {
            coeffs.iter().enumerate().filter(|(_, a)| !a.is_zero()).fold(Cyclo::zero(n), |acc, (c, a)| {
                &acc + &chi.conj().eval(c).scale(a)
            })
        })
        .collect();
    let report = BesselReport { d, h: g.h(), coeffs, per_chi };
    let (lhs, rhs) = parseval_sides(&report);
    if lhs != rhs {
        return Err(Error::HardFailure(format!("Parseval fails at d = {d}: {lhs} vs {rhs}")));
    }
    Ok(report)
}

/// Fourier coefficients a(0..=nmax) of an elliptic newform, with a(0) unused.
#[derive(Clone, Debug)]
pub struct NewformCoeffs {
    pub label: String,
    pub weight: u32,
    pub level: u64,
    pub a: Vec<i128>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Nonzero,
    Inconclusive,
}

impl Verdict {
    pub fn of(v: &CentralValue, floor: f64) -> Verdict {
        if v.is_certainly_nonzero(floor) {
            Verdict::Nonzero
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Nonzero => "NONZERO",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Both central values at θ_ψ for one character ψ.
#[derive(Clone, Debug, Serialize)]
pub struct PairValues {
    pub psi: usize,
    pub lf: CentralValue,
    pub lg: CentralValue,
    pub verdict_f: Verdict,
    pub verdict_g: Verdict,
}

impl PairValues {
    pub fn both_nonzero(&self) -> bool {
        self.verdict_f == Verdict::Nonzero && self.verdict_g == Verdict::Nonzero
    }
}

/// The verdicts for one character χ with B_χ ≠ 0.
#[derive(Clone, Debug, Serialize)]
pub struct PtbVerdict {
    pub d: u64,
    pub chi: usize,
    /// L-values at χ⁻¹, which is what the implication predicts.
    pub primary: PairValues,
    /// L-values at χ itself, kept to test the orientation of the conventions.
    pub opposite: PairValues,
}

pub struct PtbOutcome {
    pub report: BesselReport,
    pub verdicts: Vec<PtbVerdict>,
}

/// Evaluates L(½, f × θ_χ⁻¹) and L(½, g × θ_χ⁻¹) for every χ with B_χ ≠ 0.
///
/// A primary verdict that fails to clear `floor` is a [`Error::HardFailure`].
pub fn ptb_verify(table: &SiegelCoeffTable, f: &NewformCoeffs, g: &NewformCoeffs, d: u64, floor: f64, params: &AfeParams) -> Result<PtbOutcome> {
    let level = f.level.max(g.level);
    if gcd_i64(level as i64, d as i64) > 1 {
        return Err(Error::RamifiedOverlap { level, d });
    }
    let grp = class_group(d, false)?;
    let chars = characters(&grp);
    let report = bessel_sums_for(table, &grp, &chars)?;
    let targets = report.nonzero_chars();
    if targets.is_empty() {
        return Ok(PtbOutcome { report, verdicts: Vec::new() });
    }
    let inverse_of = |i: usize| chars.iter().position(|c| *c == chars[i].conj()).expect("character group is closed under conjugation");

    let mut values: HashMap<usize, PairValues> = HashMap::new();
    let engines = [AfeEngine::new(params.clone()), AfeEngine::new(params.clone())];
    let mut value_at = |psi: usize| -> Result<PairValues> {
        if let Some(v) = values.get(&psi) {
            return Ok(v.clone());
        }
        let mut out = Vec::with_capacity(2);
        for (form, engine) in [f, g].into_iter().zip(&engines) {
            let l = rankin_ldata(&form.a, form.weight, form.level, &grp, &chars[psi], form.a.len() - 1)?;
            let mut cv = engine.eval(&l, Complex64::new(0.5, 0.0))?;
            cv.label = format!("{} x theta(-{d}, chi{psi})", form.label);
            out.push(cv);
        }
        let lg = out.pop().unwrap();
        let lf = out.pop().unwrap();
        let pv = PairValues { psi, verdict_f: Verdict::of(&lf, floor), verdict_g: Verdict::of(&lg, floor), lf, lg };
        values.insert(psi, pv.clone());
        Ok(pv)
    };

    let mut verdicts = Vec::with_capacity(targets.len());
    for chi in targets {
        let primary = value_at(inverse_of(chi))?;
        let opposite = value_at(chi)?;
        if !primary.both_nonzero() {
            return Err(Error::HardFailure(format!(
                "d = {d}, χ{chi}: B_χ ≠ 0 but L(½) values {:?} ± {:.1e} and {:?} ± {:.1e} do not clear the floor {floor:e}",
                primary.lf.value, primary.lf.error_bound, primary.lg.value, primary.lg.error_bound
            )));
        }
        log::debug!("d={d} chi={chi} Lf={:?} Lg={:?}", primary.lf.value, primary.lg.value);
        verdicts.push(PtbVerdict { d, chi, primary, opposite });
    }
    Ok(PtbOutcome { report, verdicts })
}

/// Odd squarefree d ≤ x with −d fundamental, i.e. d ≡ 3 mod 4.
pub fn odd_fundamental_upto(x: u64) -> Vec<u64> {
    (3..=x).step_by(4).filter(|&d| is_squarefree(d) && is_fundamental(d)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityMember {
    pub chi: usize,
    pub lf: [f64; 2],
    pub lg: [f64; 2],
    pub err_f: f64,
    pub err_g: f64,
}

/// What happened at one d of the scan.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScanEntry {
    /// gcd(d, N) > 1.
    Skipped,
    /// Every B_χ vanishes.
    NoBessel,
    Certified { verdicts: usize, member: DensityMember },
    Failed { reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityRecord {
    pub x: u64,
    pub members: Vec<u64>,
    pub per_d: BTreeMap<u64, ScanEntry>,
    /// (δ, X^δ) reference points, for display.
    pub reference: Vec<(f64, f64)>,
    /// Every d at which Parseval held; a failure there aborts the scan instead.
    pub parseval_checked: Vec<u64>,
    #[serde(skip)]
    pub verdicts: Vec<PtbVerdict>,
}

impl DensityRecord {
    pub fn hard_failures(&self) -> Vec<(u64, &str)> {
        self.per_d
            .iter()
            .filter_map(|(d, e)| match e {
                ScanEntry::Failed { reason } => Some((*d, reason.as_str())),
                _ => None,
            })
            .collect()
    }
}

pub const REFERENCE_DELTAS: [f64; 3] = [0.25, 0.5, 0.6];

/// Scans d ≤ x and collects those for which some χ has B_χ ≠ 0 with both central values
/// certified nonzero.
///
/// Hard failures from [`ptb_verify`] are recorded per d rather than aborting the scan.
/// A failure of Parseval, or of the inversion formula, does abort it.
pub fn density_scan(table: &SiegelCoeffTable, f: &NewformCoeffs, g: &NewformCoeffs, x: u64, floor: f64, params: &AfeParams) -> Result<DensityRecord> {
    if x as i64 > table.disc_bound {
        return Err(Error::DepthExceeded { requested: x as i64, available: table.disc_bound });
    }
    let ds = odd_fundamental_upto(x);
    let results: Vec<(u64, Result<PtbOutcome>)> = ds.par_iter().map(|&d| (d, ptb_verify(table, f, g, d, floor, params))).collect();
    let mut per_d = BTreeMap::new();
    let mut members = Vec::new();
    let mut parseval_checked = Vec::new();
    let mut all = Vec::new();
    for (d, r) in results {
        let entry = match r {
            Err(Error::RamifiedOverlap { .. }) => ScanEntry::Skipped,
            Err(Error::HardFailure(reason)) if !reason.starts_with("Parseval") => ScanEntry::Failed { reason },
            Err(e) => return Err(e),
            Ok(out) => {
                parseval_checked.push(d);
                check_inversion(&out.report)?;
                match out.verdicts.first() {
                    None => ScanEntry::NoBessel,
                    Some(v) => {
                        members.push(d);
                        let p = &v.primary;
                        let member = DensityMember { chi: v.chi, lf: p.lf.value, lg: p.lg.value, err_f: p.lf.error_bound, err_g: p.lg.error_bound };
                        let n = out.verdicts.len();
                        all.extend(out.verdicts);
                        ScanEntry::Certified { verdicts: n, member }
                    }
                }
            }
        };
        per_d.insert(d, entry);
    }
    let reference = REFERENCE_DELTAS.iter().map(|&t| (t, (x as f64).powf(t))).collect();
    Ok(DensityRecord { x, members, per_d, reference, parseval_checked, verdicts: all })
}

fn check_inversion(r: &BesselReport) -> Result<()> {
    let g = class_group(r.d, false)?;
    let back = r.invert(&characters(&g));
    let n = g.h() as u32;
    for (c, (a, b)) in r.coeffs.iter().zip(&back).enumerate() {
        if Cyclo::from_rational(n, a.clone()) != *b {
            return Err(Error::HardFailure(format!("class-group inversion fails at d = {}, class {c}", r.d)));
        }
    }
    let any_b = !r.nonzero_chars().is_empty();
    if any_b != r.any_coeff_nonzero() {
        return Err(Error::HardFailure(format!("existence transfer fails at d = {}", r.d)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::qi;

    #[test]
    fn s_matrix_branches() {
        assert_eq!(s_matrix(4).unwrap(), HalfIntMat { a: 1, b: 0, c: 1 });
        assert_eq!(s_matrix(3).unwrap(), HalfIntMat { a: 1, b: 1, c: 1 });
        assert_eq!(s_matrix(23).unwrap(), HalfIntMat { a: 6, b: 1, c: 1 });
        assert!(matches!(s_matrix(5), Err(Error::BadResidue(5))));
        assert!(matches!(s_matrix(6), Err(Error::BadResidue(6))));
    }

    #[test]
    fn representatives_for_23() {
        let g = class_group(23, false).unwrap();
        let reps: Vec<_> = s_c_reps(&g).into_iter().map(|(_, s)| (s.a, s.b, s.c)).collect();
        let mut sorted = reps.clone();
        sorted.sort();
        assert_eq!(sorted, vec![(1, 1, 6), (2, -1, 3), (2, 1, 3)]);
        for (_, s) in s_c_reps(&g) {
            assert_eq!(s.abs_disc(), 23);
            assert!(s.is_primitive());
        }
        // the principal class is S(−23) up to equivalence
        let s = s_matrix(23).unwrap();
        assert_eq!(g.index_of(&s.form()), Some(0));
    }

    fn table_from(entries: &[((i64, i64, i64), i64)], bound: i64) -> SiegelCoeffTable {
        SiegelCoeffTable {
            weight: 4,
            level: 19,
            disc_bound: bound,
            coeffs: entries.iter().map(|((a, b, c), v)| (HalfIntMat { a: *a, b: *b, c: *c }, qi(*v))).collect(),
            provenance: String::new(),
        }
    }

    #[test]
    fn zero_table_gives_zero_sums() {
        let t = table_from(&[], 100);
        let r = bessel_sums(&t, 23).unwrap();
        assert!(r.per_chi.iter().all(Cyclo::is_zero));
        assert!(r.nonzero_chars().is_empty());
    }

    #[test]
    fn single_class_sum_is_the_coefficient() {
        let t = table_from(&[((1, 1, 2), 7)], 100);
        let r = bessel_sums(&t, 7).unwrap();
        assert_eq!(r.h, 1);
        assert_eq!(r.per_chi[0].as_rational(), Some(qi(7)));
    }

    #[test]
    fn sums_invert_and_satisfy_parseval() {
        // tables are keyed by GL2(Z)-reduced matrices, so (2, ±1, 3) share a value
        let t = table_from(&[((1, 1, 6), 10), ((2, 1, 3), -5)], 100);
        let r = bessel_sums(&t, 23).unwrap();
        let (l, rr) = parseval_sides(&r);
        assert_eq!(l, rr);
        check_inversion(&r).unwrap();
        // the trivial character sums the coefficients
        assert_eq!(r.per_chi[0].as_rational(), Some(qi(0)));
        assert_eq!(r.nonzero_chars(), vec![1, 2]);
        // B_χ = 10 − 5(ζ + ζ²) = 15 for both nontrivial χ
        assert_eq!(r.per_chi[1].as_rational(), Some(qi(15)));
    }

    #[test]
    fn depth_is_checked() {
        let t = table_from(&[], 20);
        assert!(matches!(bessel_sums(&t, 23), Err(Error::DepthExceeded { .. })));
    }

    #[test]
    fn scan_candidates() {
        let ds = odd_fundamental_upto(40);
        assert_eq!(ds, vec![3, 7, 11, 15, 19, 23, 31, 35, 39]);
    }
}
