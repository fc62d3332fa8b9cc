//! Degree-two Siegel forms through their Fourier coefficients a(F, T).
//!
//! Coefficients are indexed by half-integral matrices T = (a, b/2; b/2, c),
//! stored as the triple (a, b, c). Since the weights handled here are even,
//! a(F, T) depends only on the GL₂(ℤ)-class of T and tables keep one reduced
//! representative per class.

mod hecke;
mod jacobi;
mod yoshida;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::arith::{gcd_i64, Q};
use crate::classfield::{is_fundamental, mat2_mul, reduce_with_transform, Mat2, QuadForm};
use crate::error::{Error, Result};

pub use hecke::{
    calibrate_shift, euler_factor_pair, hecke_eigenvalue, hecke_tq, lemma21_divide, spin_factor, u_p, u_p_on, EulerCheck,
};
pub use jacobi::{fourier_jacobi, prime_anchor, JacobiSlice};
pub use yoshida::{build_yoshida, theta_pair_coeff, YoshidaLift, KERNEL_VERSION};

/// T = (a, b/2; b/2, c) with integers a, b, c.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HalfIntMat {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl HalfIntMat {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let t = HalfIntMat { a, b, c };
        if a <= 0 || t.disc() >= 0 {
            return Err(Error::NotPositiveDefinite(t.to_string()));
        }
        Ok(t)
    }

    /// b² − 4ac.
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    /// |disc|, the quantity bounded by a table's depth.
    pub fn abs_disc(&self) -> i64 {
        -self.disc()
    }

    pub fn content(&self) -> i64 {
        gcd_i64(gcd_i64(self.a, self.b), self.c)
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    /// disc(T) is the discriminant of an imaginary quadratic field.
    pub fn is_fundamental(&self) -> bool {
        is_fundamental(self.abs_disc() as u64)
    }

    pub fn scale(&self, m: i64) -> HalfIntMat {
        HalfIntMat { a: m * self.a, b: m * self.b, c: m * self.c }
    }

    /// AᵀTA.
    pub fn transform(&self, m: &Mat2) -> HalfIntMat {
        HalfIntMat::from(self.form().transform(m))
    }

    pub fn form(&self) -> QuadForm {
        QuadForm::new(self.a, self.b, self.c)
    }

    /// GL₂(ℤ)-reduced: 0 ≤ b ≤ a ≤ c.
    pub fn is_reduced(&self) -> bool {
        0 <= self.b && self.b <= self.a && self.a <= self.c
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.disc() < 0
    }
}

impl From<QuadForm> for HalfIntMat {
    fn from(f: QuadForm) -> Self {
        HalfIntMat { a: f.a, b: f.b, c: f.c }
    }
}

impl fmt::Display for HalfIntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}/2; {}/2, {})", self.a, self.b, self.b, self.c)
    }
}

/// The GL₂(ℤ)-reduced representative of T and a unimodular A with AᵀTA equal to it.
pub fn reduce_t(t: &HalfIntMat) -> Result<(HalfIntMat, Mat2)> {
    if !t.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(t.to_string()));
    }
    let (f, m) = reduce_with_transform(&t.form())?;
    if f.b < 0 {
        let flip: Mat2 = [[1, 0], [0, -1]];
        let r = HalfIntMat::new(f.a, -f.b, f.c)?;
        return Ok((r, mat2_mul(&m, &flip)));
    }
    Ok((HalfIntMat::from(f), m))
}

/// Every reduced T with 0 < |disc T| ≤ bound, in sorted order.
pub fn reduced_keys(bound: i64) -> Vec<HalfIntMat> {
    let mut out = Vec::new();
    let mut a = 1;
    while 3 * a * a <= bound {
        for b in 0..=a {
            let mut c = a;
            while 4 * a * c - b * b <= bound {
                out.push(HalfIntMat { a, b, c });
                c += 1;
            }
        }
        a += 1;
    }
    out.sort();
    out
}

/// Anything that can produce Fourier coefficients of a Siegel form.
pub trait CoeffSource: Sync {
    fn weight(&self) -> u32;
    fn level(&self) -> u64;
    fn coeff(&self, t: &HalfIntMat) -> Result<Q>;
}

/// Exact coefficients of a Siegel form for all reduced T with |disc T| ≤ disc_bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiegelCoeffTable {
    pub weight: u32,
    pub level: u64,
    pub disc_bound: i64,
    pub coeffs: BTreeMap<HalfIntMat, Q>,
    pub provenance: String,
}

impl SiegelCoeffTable {
    /// a(F, T) for any positive definite T inside the table's depth.
    pub fn get(&self, t: &HalfIntMat) -> Result<Q> {
        let (r, _) = reduce_t(t)?;
        if r.abs_disc() > self.disc_bound {
            return Err(Error::DepthExceeded { requested: r.abs_disc(), available: self.disc_bound });
        }
        Ok(self.coeffs.get(&r).cloned().unwrap_or_else(Q::zero))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(Zero::is_zero)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (&HalfIntMat, &Q)> {
        self.coeffs.iter().filter(|(_, v)| !v.is_zero())
    }

    pub fn scaled(&self, s: &Q) -> SiegelCoeffTable {
        SiegelCoeffTable {
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, v * s)).collect(),
            ..self.clone()
        }
    }

    /// Serialise in the `.ycf` text format.
    pub fn to_ycf(&self) -> String {
        let mut s = format!(
            "YCF1 weight={} level={} bound={} prov={}\n",
            self.weight, self.level, self.disc_bound, self.provenance
        );
        for (t, v) in &self.coeffs {
            s.push_str(&format!("{} {} {} {} {}\n", t.a, t.b, t.c, v.numer(), v.denom()));
        }
        s
    }

    pub fn from_ycf(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty table file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("YCF1") {
            return Err(Error::Parse(format!("bad header: {header}")));
        }
        let mut kv = BTreeMap::new();
        for f in fields {
            let (k, v) = f.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field: {f}")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let field = |k: &str| kv.get(k).cloned().ok_or_else(|| Error::Parse(format!("header lacks {k}")));
        let num = |s: String| s.parse::<i64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let weight = num(field("weight")?)? as u32;
        let level = num(field("level")?)? as u64;
        let disc_bound = num(field("bound")?)?;
        let provenance = field("prov")?;
        let mut coeffs = BTreeMap::new();
        for (ln, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            if parts.len() != 5 {
                return Err(Error::Parse(format!("line {}: expected 5 fields", ln + 2)));
            }
            let ints: Vec<i64> = parts[..3].iter().map(|s| num(s.to_string())).collect::<Result<_>>()?;
            let big = |s: &str| s.parse::<BigInt>().map_err(|e| Error::Parse(format!("{s}: {e}")));
            let (n, d) = (big(parts[3])?, big(parts[4])?);
            if !d.is_positive() {
                return Err(Error::Parse(format!("line {}: nonpositive denominator", ln + 2)));
            }
            let t = HalfIntMat::new(ints[0], ints[1], ints[2])?;
            if !t.is_reduced() {
                return Err(Error::Parse(format!("line {}: key {t} is not reduced", ln + 2)));
            }
            coeffs.insert(t, Q::new(n, d));
        }
        Ok(SiegelCoeffTable { weight, level, disc_bound, coeffs, provenance })
    }

    /// Write via a temporary file and an atomic rename.
    pub fn write_ycf(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_ycf().as_bytes())
    }

    pub fn read_ycf(path: &Path) -> Result<Self> {
        Self::from_ycf(&std::fs::read_to_string(path)?)
    }
}

impl CoeffSource for SiegelCoeffTable {
    fn weight(&self) -> u32 {
        self.weight
    }
    fn level(&self) -> u64 {
        self.level
    }
    fn coeff(&self, t: &HalfIntMat) -> Result<Q> {
        self.get(t)
    }
}

/// Write `bytes` to `path` so that readers see either the old or the complete new file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    #[test]
    fn reduces_examples() {
        let id = HalfIntMat::new(1, 0, 1).unwrap();
        assert_eq!(reduce_t(&id).unwrap().0, id);
        let t = HalfIntMat::new(6, 1, 1).unwrap();
        let (r, a) = reduce_t(&t).unwrap();
        assert_eq!(r, HalfIntMat::new(1, 1, 6).unwrap());
        assert_eq!(t.transform(&a), r);
        let t = HalfIntMat::new(2, -1, 3).unwrap();
        assert_eq!(reduce_t(&t).unwrap().0, HalfIntMat::new(2, 1, 3).unwrap());
        assert!(matches!(reduce_t(&HalfIntMat { a: 1, b: 2, c: 1 }), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn keys_are_complete() {
        let keys = reduced_keys(40);
        for a in 1..=40 {
            for b in -40..=40 {
                for c in 1..=40 {
                    let t = HalfIntMat { a, b, c };
                    if t.is_positive_definite() && t.abs_disc() <= 40 {
                        let r = reduce_t(&t).unwrap().0;
                        assert!(keys.binary_search(&r).is_ok(), "{r}");
                    }
                }
            }
        }
        assert!(keys.iter().all(|k| k.is_reduced()));
    }

    #[test]
    fn ycf_round_trip() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(HalfIntMat::new(1, 1, 1).unwrap(), q(-3, 7));
        coeffs.insert(HalfIntMat::new(1, 0, 1).unwrap(), q(0, 1));
        let t = SiegelCoeffTable { weight: 4, level: 19, disc_bound: 4, coeffs, provenance: "abc".into() };
        let text = t.to_ycf();
        assert!(text.starts_with("YCF1 weight=4 level=19 bound=4 prov=abc\n1 0 1 0 1\n1 1 1 -3 7\n"));
        assert_eq!(SiegelCoeffTable::from_ycf(&text).unwrap(), t);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.ycf");
        t.write_ycf(&p).unwrap();
        assert_eq!(SiegelCoeffTable::read_ycf(&p).unwrap(), t);
        assert!(t.get(&HalfIntMat::new(1, 0, 2).unwrap()).is_err());
    }
}
