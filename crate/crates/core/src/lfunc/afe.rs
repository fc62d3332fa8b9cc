use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::gamma::ln_gamma_r;
use super::LData;
use crate::error::{Error, Result};

/// A test function for the smoothed functional equation: even, entire, G(0) = 1, and
/// bounded on vertical lines.
pub trait Smoother: Send + Sync {
    fn name(&self) -> &'static str;
    fn eval(&self, u: Complex64) -> Complex64;
    /// Upper bound for log |G| on the line Re u = c, as a function of t = Im u.
    fn ln_abs_bound(&self, c: f64, t: f64) -> f64;
}

/// G ≡ 1: the weights are the incomplete-gamma type functions of the gamma factor alone.
pub struct Plain;

/// G(u) = exp(α u²).
pub struct Gauss {
    pub alpha: f64,
}

/// G(u) = cos(βu); bounded by cosh(βt) on every vertical line, so shifting the contour
/// far to the right costs nothing. β must stay below π/4 times the degree.
pub struct Cosine {
    pub beta: f64,
}

impl Default for Cosine {
    fn default() -> Self {
        Cosine { beta: 0.5 }
    }
}

impl Default for Gauss {
    fn default() -> Self {
        Gauss { alpha: 0.1 }
    }
}

impl Smoother for Plain {
    fn name(&self) -> &'static str {
        "exponential"
    }
    fn eval(&self, _u: Complex64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
    fn ln_abs_bound(&self, _c: f64, _t: f64) -> f64 {
        0.0
    }
}

impl Smoother for Gauss {
    fn name(&self) -> &'static str {
        "gauss"
    }
    fn eval(&self, u: Complex64) -> Complex64 {
        (u * u * self.alpha).exp()
    }
    fn ln_abs_bound(&self, c: f64, t: f64) -> f64 {
        self.alpha * (c * c - t * t)
    }
}

impl Smoother for Cosine {
    fn name(&self) -> &'static str {
        "cosine"
    }
    fn eval(&self, u: Complex64) -> Complex64 {
        (u * self.beta).cos()
    }
    fn ln_abs_bound(&self, _c: f64, t: f64) -> f64 {
        // |cos(β(c + it))| ≤ cosh(βt)
        (self.beta * t).cosh().ln()
    }
}

pub fn smoother_registry() -> Vec<Box<dyn Smoother>> {
    vec![Box::new(Plain), Box::new(Cosine::default()), Box::new(Gauss::default())]
}

pub fn smoother_by_name(name: &str) -> Result<Box<dyn Smoother>> {
    smoother_registry()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownStrategy { kind: "smoother", name: name.to_string() })
}

#[derive(Clone, Debug, Serialize)]
pub struct AfeParams {
    pub smoother: String,
    /// Number of coefficients used; chosen from `tol` when absent.
    pub terms: Option<usize>,
    /// Target bound on the truncation error of L(s).
    pub tol: f64,
    /// Trapezoid step on the vertical line.
    pub step: f64,
    /// Real part of the integration line.
    pub line: f64,
}

impl Default for AfeParams {
    fn default() -> Self {
        AfeParams { smoother: "exponential".into(), terms: None, tol: 1e-12, step: 0.05, line: 1.0 }
    }
}

/// One evaluation of L(s), with a rigorous-in-intent bound on the numerical error.
#[derive(Clone, Debug, Serialize)]
pub struct CentralValue {
    pub label: String,
    pub s: [f64; 2],
    pub value: [f64; 2],
    pub lambda: [f64; 2],
    pub error_bound: f64,
    pub terms: usize,
    pub sign: [f64; 2],
    pub smoother: String,
}

impl CentralValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }

    /// Nonzero beyond the error bound by a margin.
    pub fn is_certainly_nonzero(&self, margin: f64) -> bool {
        self.value().norm() > self.error_bound + margin
    }
}

fn c2(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn ln_gamma_factor(l: &LData, z: Complex64) -> Complex64 {
    let mut acc = z * 0.5 * l.conductor.ln();
    for &mu in &l.gamma_shifts {
        acc += ln_gamma_r(z + mu);
    }
    acc
}

/// Quadrature nodes for Φ(n, s) = (1/2πi) ∫_(c) γ(s + u) n^{−s−u} G(u) du/u, u = c + ikh.
struct Contour {
    s_plus_c: Complex64,
    step: f64,
    /// Weights for k = −K..=K.
    weights: Vec<Complex64>,
    k: i64,
}

impl Contour {
    fn new(l: &LData, s: Complex64, g: &dyn Smoother, c: f64, h: f64) -> Contour {
        let w = |k: i64| -> Complex64 {
            let u = Complex64::new(c, k as f64 * h);
            (ln_gamma_factor(l, s + u)).exp() * g.eval(u) / u * (h / (2.0 * PI))
        };
        let w0 = w(0).norm();
        let mut k = 1i64;
        let mut quiet = 0;
        let mut peak = w0;
        while quiet < 20 && k < 400_000 {
            let m = w(k).norm().max(w(-k).norm());
            peak = peak.max(m);
            if m < 1e-22 * peak {
                quiet += 1;
            } else {
                quiet = 0;
            }
            k += 1;
        }
        let weights = (-k..=k).map(w).collect();
        Contour { s_plus_c: s + c, step: h, weights, k }
    }

    /// (Φ with step h, Φ with step 2h) at n.
    fn phi(&self, n: usize) -> (Complex64, Complex64) {
        let ln = (n as f64).ln();
        let base = (-self.s_plus_c * ln).exp();
        let z = Complex64::from_polar(1.0, -self.step * ln);
        let mut pw = Complex64::from_polar(1.0, self.k as f64 * self.step * ln);
        let (mut fine, mut coarse) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (i, w) in self.weights.iter().enumerate() {
            let t = w * pw;
            fine += t;
            if (i as i64 - self.k) % 2 == 0 {
                coarse += t;
            }
            pw *= z;
        }
        (base * fine, base * coarse * 2.0)
    }
}

struct Sums {
    fine: Complex64,
    coarse: Complex64,
    abs: f64,
}

/// Φ(n, s) for n = 0..=terms at step h and at step 2h.
struct PhiTable {
    fine: Vec<Complex64>,
    coarse: Vec<Complex64>,
}

impl PhiTable {
    fn new(contour: &Contour, terms: usize) -> PhiTable {
        const BLOCK: usize = 512;
        let idx: Vec<usize> = (0..=terms).collect();
        let blocks: Vec<Vec<(Complex64, Complex64)>> = idx
            .par_chunks(BLOCK)
            .map(|chunk| chunk.iter().map(|&n| if n == 0 { Default::default() } else { contour.phi(n) }).collect())
            .collect();
        let (fine, coarse) = blocks.into_iter().flatten().unzip();
        PhiTable { fine, coarse }
    }

    fn len(&self) -> usize {
        self.fine.len() - 1
    }

    /// Σ_{n ≤ terms} b(n) Φ(n), summed block by block in a fixed order.
    fn dot(&self, b: &[Complex64], terms: usize) -> Sums {
        let mut out = Sums { fine: Complex64::new(0.0, 0.0), coarse: Complex64::new(0.0, 0.0), abs: 0.0 };
        for n in 1..=terms {
            let f = b[n] * self.fine[n];
            out.fine += f;
            out.coarse += b[n] * self.coarse[n];
            out.abs += f.norm();
        }
        out
    }
}

/// Bound on Σ_{n > m} |b(n) Φ(n, s)| from |b(n)| ≤ C n^θ and |Φ(n, s)| ≤ n^{−σ−c'} I(c'),
/// optimised over the line c' and over the available (C, θ).
struct TailModel {
    bounds: Vec<(f64, f64)>,
    sigma: f64,
    /// (c', log I(c'))
    lines: Vec<(f64, f64)>,
}

impl TailModel {
    fn new(l: &LData, s: Complex64, g: &dyn Smoother, h: f64) -> TailModel {
        let theta_max = l.coeff_bound.iter().map(|b| b.1).fold(0.0, f64::max);
        let theta_min = l.coeff_bound.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
        let start = (theta_min + 1.0 - s.re + 0.25).max(0.25);
        let stop = theta_max + 1.0 - s.re + 150.0;
        // I(c') only needs a few digits: a coarse step keeps this cheap
        let h = h.max(0.2);
        let mut lines = Vec::new();
        let mut cp = start;
        while cp <= stop {
            lines.push((cp, ln_abs_integral(l, s, g, cp, h)));
            cp += 0.5;
        }
        TailModel { bounds: l.coeff_bound.clone(), sigma: s.re, lines }
    }

    fn bound(&self, m: usize) -> f64 {
        let lm = (m as f64).ln();
        let mut best = f64::INFINITY;
        for &(cc, theta) in &self.bounds {
            for &(cp, ln_i) in &self.lines {
                let expo = theta + 1.0 - self.sigma - cp;
                if expo >= 0.0 {
                    continue;
                }
                best = best.min(cc.ln() + ln_i + expo * lm - (-expo).ln());
            }
        }
        best.exp()
    }
}

/// log of (1/2π) ∫ |γ(s + c + it) G(c + it) / (c + it)| dt by the trapezoid rule in log
/// space, doubled to cover the quadrature error on a positive integrand.
fn ln_abs_integral(l: &LData, s: Complex64, g: &dyn Smoother, c: f64, h: f64) -> f64 {
    let f = |t: f64| -> f64 {
        let u = Complex64::new(c, t);
        ln_gamma_factor(l, s + u).re + g.ln_abs_bound(c, t) - u.norm().ln()
    };
    let mut vals = vec![f(0.0)];
    let mut peak = vals[0];
    let mut quiet = 0;
    let mut k = 1;
    while quiet < 20 && k < 1_000_000 {
        let (a, b) = (f(k as f64 * h), f(-(k as f64) * h));
        peak = peak.max(a).max(b);
        if a.max(b) < peak - 60.0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        vals.push(a);
        vals.push(b);
        k += 1;
    }
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals.iter().map(|v| (v - m).exp()).sum();
    m + sum.ln() + (2.0 * h / (2.0 * PI)).ln()
}

/// Tail bounds for both halves of the functional equation at s.
struct Tails(TailModel, TailModel);

impl Tails {
    fn new(l: &LData, s: Complex64, g: &dyn Smoother, h: f64) -> Tails {
        Tails(TailModel::new(l, s, g, h), TailModel::new(l, Complex64::new(1.0, 0.0) - s, g, h))
    }

    fn bound(&self, m: usize) -> f64 {
        self.0.bound(m) + self.1.bound(m)
    }
}

fn bits(z: Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

/// Everything the kernel Φ depends on besides s and the smoother.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Shape {
    shifts: Vec<u64>,
    conductor: u64,
}

impl Shape {
    fn of(l: &LData) -> Shape {
        Shape { shifts: l.gamma_shifts.iter().map(|x| x.to_bits()).collect(), conductor: l.conductor.to_bits() }
    }
}

type TableKey = (Shape, (u64, u64), &'static str);
type TermsKey = (Shape, Vec<(u64, u64)>, (u64, u64), &'static str);

/// Evaluator that caches kernel tables and truncation points, so that L-functions sharing
/// a gamma factor and conductor (all characters of one class group) reuse them.
pub struct AfeEngine {
    pub params: AfeParams,
    tables: Mutex<HashMap<TableKey, Arc<PhiTable>>>,
    terms: Mutex<HashMap<TermsKey, usize>>,
    tails: Mutex<HashMap<TermsKey, Arc<Tails>>>,
}

impl AfeEngine {
    pub fn new(params: AfeParams) -> AfeEngine {
        AfeEngine { params, tables: Mutex::default(), terms: Mutex::default(), tails: Mutex::default() }
    }

    fn tails(&self, l: &LData, s: Complex64, g: &dyn Smoother) -> Arc<Tails> {
        let key = (Shape::of(l), l.coeff_bound.iter().map(|(a, b)| (a.to_bits(), b.to_bits())).collect(), bits(s), g.name());
        if let Some(t) = self.tails.lock().unwrap().get(&key) {
            return t.clone();
        }
        let t = Arc::new(Tails::new(l, s, g, self.params.step));
        self.tails.lock().unwrap().insert(key, t.clone());
        t
    }

    /// Smallest number of terms for which the truncation error of L(s) is below the tolerance.
    pub fn required_terms(&self, l: &LData, s: Complex64, g: &dyn Smoother) -> usize {
        let key = (Shape::of(l), l.coeff_bound.iter().map(|(a, b)| (a.to_bits(), b.to_bits())).collect(), bits(s), g.name());
        if let Some(&t) = self.terms.lock().unwrap().get(&key) {
            return t;
        }
        let target = self.params.tol * ln_gamma_factor(l, s).exp().norm();
        let tails = self.tails(l, s, g);
        let ok = |m: usize| tails.bound(m) <= target;
        let mut hi = 16usize;
        while !ok(hi) {
            hi *= 2;
            if hi > 1 << 40 {
                return usize::MAX;
            }
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.terms.lock().unwrap().insert(key, hi);
        hi
    }

    fn table(&self, l: &LData, s: Complex64, g: &dyn Smoother, terms: usize) -> Arc<PhiTable> {
        let key = (Shape::of(l), bits(s), g.name());
        if let Some(t) = self.tables.lock().unwrap().get(&key) {
            if t.len() >= terms {
                return t.clone();
            }
        }
        let contour = Contour::new(l, s, g, self.params.line, self.params.step);
        let t = Arc::new(PhiTable::new(&contour, terms));
        self.tables.lock().unwrap().insert(key, t.clone());
        t
    }

    /// Λ(s) = S(b, s) + ε S(b̄, 1 − s) for one smoother, returned as the two sums.
    fn lambda_parts(&self, l: &LData, s: Complex64, g: &dyn Smoother, terms: usize) -> (Sums, Sums) {
        let one = Complex64::new(1.0, 0.0);
        let a = self.table(l, s, g, terms).dot(&l.coeffs, terms);
        let b = self.table(l, one - s, g, terms).dot(&l.dual(), terms);
        (a, b)
    }

    fn terms_for_pair(&self, l: &LData, s: Complex64) -> Result<usize> {
        let need = self.required_terms(l, s, &Plain).max(self.required_terms(l, s, &Cosine::default()));
        check_terms(l, need)
    }

    /// Coefficients needed by [`AfeEngine::eval`] at s, including the sign solve when the
    /// sign is not known.
    pub fn terms_needed(&self, l: &LData, s: Complex64) -> Result<usize> {
        let g = smoother_by_name(&self.params.smoother)?;
        let mut need = self.params.terms.unwrap_or_else(|| self.required_terms(l, s, g.as_ref()));
        if l.sign.is_none() {
            for p in SIGN_POINTS {
                need = need.max(self.required_terms(l, p, &Plain)).max(self.required_terms(l, p, &Cosine::default()));
            }
        }
        Ok(need)
    }

    /// Root number from two smoothers (exponential and cosine) at two auxiliary points: with
    /// Λ = A_i + ε B_i for both test functions, ε = (A₁ − A₂)/(B₂ − B₁). Returns the first
    /// solution and its disagreement with the second; a self-dual solution within 10⁻⁶ of ±1
    /// is snapped.
    pub fn solve_sign(&self, l: &LData) -> Result<(Complex64, f64)> {
        let (g1, g2) = (Plain, Cosine::default());
        let mut sols = Vec::new();
        for s in SIGN_POINTS {
            let terms = self.terms_for_pair(l, s)?;
            let (a1, b1) = self.lambda_parts(l, s, &g1, terms);
            let (a2, b2) = self.lambda_parts(l, s, &g2, terms);
            sols.push((a1.fine - a2.fine) / (b2.fine - b1.fine));
        }
        let mut eps = sols[0];
        let spread = (sols[0] - sols[1]).norm();
        if l.is_self_dual() {
            let r = eps.re.round();
            if r.abs() == 1.0 && (eps - r).norm() < 1e-6 {
                eps = Complex64::new(r, 0.0);
            }
        }
        Ok((eps, spread))
    }

    /// L(s) from the smoothed approximate functional equation.
    pub fn eval(&self, l: &LData, s: Complex64) -> Result<CentralValue> {
        let p = &self.params;
        let g = smoother_by_name(&p.smoother)?;
        let (sign, sign_err) = match l.sign {
            Some(e) => (e, 0.0),
            None => {
                let (e, spread) = self.solve_sign(l)?;
                // a snapped sign is exact; otherwise the spread of the two solutions stands in
                (e, if e.im == 0.0 && e.re.abs() == 1.0 { 0.0 } else { spread })
            }
        };
        let terms = match p.terms {
            Some(t) => check_terms(l, t)?,
            None => check_terms(l, self.required_terms(l, s, g.as_ref()))?,
        };
        let (a, b) = self.lambda_parts(l, s, g.as_ref(), terms);
        let lambda = a.fine + sign * b.fine;
        let quad = (a.fine - a.coarse).norm() + (b.fine - b.coarse).norm();
        let round = 1e-14 * (a.abs + b.abs);
        let tail = self.tails(l, s, g.as_ref()).bound(terms);
        let gam = ln_gamma_factor(l, s).exp();
        let value = lambda / gam;
        let error_bound = (tail + quad + round + sign_err * b.fine.norm()) / gam.norm();
        Ok(CentralValue {
            label: l.label.clone(),
            s: c2(s),
            value: c2(value),
            lambda: c2(lambda),
            error_bound,
            terms,
            sign: c2(sign),
            smoother: g.name().to_string(),
        })
    }

    /// |Λ_exponential(s) − Λ_cosine(s)| relative to the size of the terms summed: zero up to
    /// rounding exactly when the gamma factor, conductor and sign are right.
    pub fn fe_residual(&self, l: &LData, s: Complex64, sign: Complex64) -> Result<f64> {
        let terms = self.terms_for_pair(l, s)?;
        let (a1, b1) = self.lambda_parts(l, s, &Plain, terms);
        let (a2, b2) = self.lambda_parts(l, s, &Cosine::default(), terms);
        let l1 = a1.fine + sign * b1.fine;
        let l2 = a2.fine + sign * b2.fine;
        let scale = a1.abs + b1.abs + a2.abs + b2.abs;
        Ok((l1 - l2).norm() / scale)
    }
}

/// Auxiliary points for the root number, away from the points used to test the result.
const SIGN_POINTS: [Complex64; 2] = [Complex64::new(0.55, 0.45), Complex64::new(0.7, 0.2)];

fn check_terms(l: &LData, needed: usize) -> Result<usize> {
    if needed > l.nmax() {
        return Err(Error::PrecisionUnreachable { needed, available: l.nmax() });
    }
    Ok(needed)
}

/// One-off evaluation; see [`AfeEngine`] for repeated use.
pub fn afe_eval(l: &LData, s: Complex64, p: &AfeParams) -> Result<CentralValue> {
    AfeEngine::new(p.clone()).eval(l, s)
}

pub fn solve_sign(l: &LData, p: &AfeParams) -> Result<(Complex64, f64)> {
    AfeEngine::new(p.clone()).solve_sign(l)
}

pub fn fe_residual(l: &LData, s: Complex64, sign: Complex64, p: &AfeParams) -> Result<f64> {
    AfeEngine::new(p.clone()).fe_residual(l, s, sign)
}

pub fn required_terms(l: &LData, s: Complex64, g: &dyn Smoother, p: &AfeParams) -> usize {
    AfeEngine::new(p.clone()).required_terms(l, s, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        assert_eq!(smoother_by_name("gauss").unwrap().name(), "gauss");
        assert!(matches!(smoother_by_name("box"), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn smoothers_are_even_and_normalised() {
        for g in smoother_registry() {
            let u = Complex64::new(0.3, 1.7);
            assert!((g.eval(u) - g.eval(-u)).norm() < 1e-14);
            assert!((g.eval(Complex64::new(0.0, 0.0)) - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn quadratic_character_at_one_half() {
        // L(1/2, χ_{−4}) = 0.66769145718960917...
        let l = LData::kronecker(-4, 400);
        let v = afe_eval(&l, Complex64::new(0.5, 0.0), &AfeParams::default()).unwrap();
        assert!((v.value[0] - 0.667_691_457_189_609_2).abs() < 1e-10, "{v:?}");
        assert!(v.error_bound < 1e-10);
    }
}
