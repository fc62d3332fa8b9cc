//! Imaginary quadratic fields through binary quadratic forms: reduction,
//! composition, class groups, their characters, and the weight-one theta
//! series attached to a class character.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::arith::{factor, gcd_i64, is_squarefree, qi, Cyclo};
use crate::error::{Error, Result};

/// A positive integer d such that -d is a discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Discriminant(pub u64);

impl Discriminant {
    pub fn new(d: u64) -> Result<Self> {
        if d == 0 || !(d % 4 == 0 || d % 4 == 3) {
            return Err(Error::BadResidue(d));
        }
        Ok(Discriminant(d))
    }

    pub fn fundamental(d: u64) -> Result<Self> {
        if !is_fundamental(d) {
            return Err(Error::NotFundamental(d));
        }
        Ok(Discriminant(d))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Number of units of the maximal order.
    pub fn unit_count(self) -> u64 {
        match self.0 {
            3 => 6,
            4 => 4,
            _ => 2,
        }
    }
}

/// True iff -d is a fundamental discriminant.
pub fn is_fundamental(d: u64) -> bool {
    if d < 3 {
        return false;
    }
    match d % 4 {
        3 => is_squarefree(d),
        0 => {
            let m = d / 4;
            (m % 4 == 1 || m % 4 == 2) && is_squarefree(m)
        }
        _ => false,
    }
}

/// The binary form a x² + b xy + c y².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

/// A 2×2 integer matrix [[m00, m01], [m10, m11]].
pub type Mat2 = [[i64; 2]; 2];

pub fn mat2_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

pub const MAT2_ID: Mat2 = [[1, 0], [0, 1]];

impl QuadForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    /// b² - 4ac.
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_primitive(&self) -> bool {
        gcd_i64(gcd_i64(self.a, self.b), self.c) == 1
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.disc() < 0
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    /// The form (x, y) ↦ f(M (x, y)ᵀ).
    pub fn transform(&self, m: &Mat2) -> QuadForm {
        let (p, q, r, s) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        QuadForm {
            a: self.eval(p, r),
            b: 2 * self.a * p * q + self.b * (p * s + q * r) + 2 * self.c * r * s,
            c: self.eval(q, s),
        }
    }

    /// Reduced in the proper (SL₂) sense: |b| ≤ a ≤ c, and b ≥ 0 if |b| = a or a = c.
    pub fn is_reduced(&self) -> bool {
        self.b.abs() <= self.a && self.a <= self.c && (self.b >= 0 || (self.b.abs() != self.a && self.a != self.c))
    }

    pub fn principal(d: u64) -> QuadForm {
        let d = d as i64;
        if d % 4 == 0 {
            QuadForm::new(1, 0, d / 4)
        } else {
            QuadForm::new(1, 1, (1 + d) / 4)
        }
    }

    pub fn inverse(&self) -> QuadForm {
        reduce_form(&QuadForm::new(self.a, -self.b, self.c)).expect("inverse of a definite form")
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

/// Reduce a positive definite form, returning the reduced form and M ∈ SL₂(Z) with f∘M = reduced.
pub fn reduce_with_transform(f: &QuadForm) -> Result<(QuadForm, Mat2)> {
    if !f.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(f.to_string()));
    }
    let (mut a, mut b, mut c) = (f.a as i128, f.b as i128, f.c as i128);
    let mut m: [[i128; 2]; 2] = [[1, 0], [0, 1]];
    loop {
        // b into (-a, a]
        if b <= -a || b > a {
            let t = (a - b).div_euclid(2 * a);
            c += a * t * t + b * t;
            b += 2 * a * t;
            m = [[m[0][0], m[0][0] * t + m[0][1]], [m[1][0], m[1][0] * t + m[1][1]]];
        }
        if a > c {
            (a, b, c) = (c, -b, a);
            m = [[m[0][1], -m[0][0]], [m[1][1], -m[1][0]]];
            continue;
        }
        if a == c && b < 0 {
            (a, b, c) = (c, -b, a);
            m = [[m[0][1], -m[0][0]], [m[1][1], -m[1][0]]];
        }
        break;
    }
    let cast = |x: i128| x as i64;
    Ok((
        QuadForm::new(cast(a), cast(b), cast(c)),
        [[cast(m[0][0]), cast(m[0][1])], [cast(m[1][0]), cast(m[1][1])]],
    ))
}

pub fn reduce_form(f: &QuadForm) -> Result<QuadForm> {
    reduce_with_transform(f).map(|(r, _)| r)
}

/// Gauss composition of two primitive forms of the same discriminant, reduced.
pub fn compose(f1: &QuadForm, f2: &QuadForm) -> Result<QuadForm> {
    if f1.disc() != f2.disc() {
        return Err(Error::DiscMismatch(f1.disc(), f2.disc()));
    }
    for f in [f1, f2] {
        if !f.is_primitive() {
            return Err(Error::NotPrimitive(f.to_string()));
        }
    }
    let (f1, f2) = if f1.a > f2.a { (f2, f1) } else { (f1, f2) };
    let (a1, b1) = (f1.a as i128, f1.b as i128);
    let (a2, b2, c2) = (f2.a as i128, f2.b as i128, f2.c as i128);
    let s = (b1 + b2) / 2;
    let n = b2 - s;
    let (d, y1) = if a2 % a1 == 0 {
        (a1, 0i128)
    } else {
        let (g, u, _v) = xgcd128(a2, a1);
        (g, u)
    };
    let (d1, x2, y2) = if s % d == 0 {
        (d, 0i128, -1i128)
    } else {
        let (g, u, v) = xgcd128(s, d);
        (g, u, -v)
    };
    let v1 = a1 / d1;
    let v2 = a2 / d1;
    let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
    let b3 = b2 + 2 * v2 * r;
    let a3 = v1 * v2;
    let c3 = (c2 * d1 + r * (b2 + v2 * r)) / v1;
    let out = QuadForm::new(a3 as i64, b3 as i64, c3 as i64);
    debug_assert_eq!(out.disc(), f1.disc());
    reduce_form(&out)
}

fn xgcd128(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// All reduced primitive forms of discriminant -d (the brute-force enumeration).
pub fn reduced_forms(d: u64) -> Vec<QuadForm> {
    let d = d as i64;
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= d {
        for b in -a + 1..=a {
            if (b * b + d) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b + d) / (4 * a);
            let f = QuadForm::new(a, b, c);
            if f.is_reduced() && f.is_primitive() {
                out.push(f);
            }
        }
        a += 1;
    }
    out.sort_by_key(|f| (f.a, f.b.abs(), f.b < 0, f.c));
    out
}

/// The form class group Cl(-d) with its Cayley table.
#[derive(Clone, Debug)]
pub struct ClassGroup {
    pub disc: Discriminant,
    pub elements: Vec<QuadForm>,
    pub cayley: Vec<Vec<usize>>,
    index: HashMap<QuadForm, usize>,
}

impl ClassGroup {
    pub fn h(&self) -> usize {
        self.elements.len()
    }

    pub fn index_of(&self, f: &QuadForm) -> Option<usize> {
        let r = reduce_form(f).ok()?;
        self.index.get(&r).copied()
    }

    pub fn op(&self, i: usize, j: usize) -> usize {
        self.cayley[i][j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        (0..self.h()).find(|&j| self.cayley[i][j] == 0).expect("group inverse")
    }

    /// Order of element i.
    pub fn element_order(&self, i: usize) -> usize {
        let mut x = i;
        let mut k = 1;
        while x != 0 {
            x = self.op(x, i);
            k += 1;
        }
        k
    }

    /// Invariant factors of the group (each divides the next).
    pub fn structure(&self) -> Vec<usize> {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for i in 0..self.h() {
            *counts.entry(self.element_order(i)).or_insert(0) += 1;
        }
        invariant_factors_from_order_counts(self.h(), &counts)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let chars = characters(self);
        serde_json::json!({
            "d": self.disc.0,
            "h": self.h(),
            "forms": self.elements.iter().map(|f| [f.a, f.b, f.c]).collect::<Vec<_>>(),
            "cayley": self.cayley,
            "characters": chars.iter().map(|c| c.values.clone()).collect::<Vec<_>>(),
        })
    }
}

fn invariant_factors_from_order_counts(h: usize, counts: &HashMap<usize, usize>) -> Vec<usize> {
    // For each prime p | h, the number of elements of order dividing p^j determines the p-part.
    let mut factors: Vec<Vec<usize>> = Vec::new();
    for (p, _) in factor(h as u64) {
        let p = p as usize;
        let mut ranks = Vec::new();
        let mut pj = 1usize;
        let mut prev = 1usize;
        loop {
            pj *= p;
            let n: usize = counts.iter().filter(|(o, _)| pj % **o == 0).map(|(_, c)| c).sum();
            if n == prev {
                break;
            }
            // log_p(n / prev) = number of cyclic factors of order ≥ p^j
            let mut r = 0;
            let mut t = n / prev;
            while t > 1 {
                t /= p;
                r += 1;
            }
            ranks.push(r);
            prev = n;
        }
        // ranks[j] = #cyclic p-factors of order ≥ p^{j+1}
        let mut cyc = Vec::new();
        for j in 0..ranks.len() {
            let next = ranks.get(j + 1).copied().unwrap_or(0);
            for _ in 0..ranks[j] - next {
                cyc.push(p.pow(j as u32 + 1));
            }
        }
        cyc.sort_unstable_by(|a, b| b.cmp(a));
        factors.push(cyc);
    }
    let len = factors.iter().map(|f| f.len()).max().unwrap_or(0);
    let mut out: Vec<usize> = (0..len)
        .map(|i| factors.iter().map(|f| f.get(i).copied().unwrap_or(1)).product())
        .collect();
    out.reverse();
    if out.is_empty() {
        out.push(1);
    }
    out
}

/// The class group of discriminant -d. Non-fundamental d require `allow_nonfundamental`.
pub fn class_group(d: u64, allow_nonfundamental: bool) -> Result<ClassGroup> {
    if !allow_nonfundamental && !is_fundamental(d) {
        return Err(Error::NotFundamental(d));
    }
    let disc = Discriminant::new(d)?;
    let elements = reduced_forms(d);
    let index: HashMap<QuadForm, usize> = elements.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let h = elements.len();
    let mut cayley = vec![vec![0usize; h]; h];
    for i in 0..h {
        for j in i..h {
            let r = compose(&elements[i], &elements[j])?;
            let k = *index.get(&r).ok_or_else(|| Error::HardFailure(format!("composition left the form set: {r}")))?;
            cayley[i][j] = k;
            cayley[j][i] = k;
        }
    }
    Ok(ClassGroup {
        disc,
        elements,
        cayley,
        index,
    })
}

/// A character of a class group, valued in h-th roots of unity: χ(c) = ζ_h^{values[c]}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassCharacter {
    pub h: u32,
    pub values: Vec<u32>,
    pub order: u32,
}

impl ClassCharacter {
    pub fn eval(&self, class: usize) -> Cyclo {
        Cyclo::root_power(self.h, self.values[class] as i64)
    }

    pub fn conj(&self) -> ClassCharacter {
        ClassCharacter {
            h: self.h,
            values: self.values.iter().map(|&v| (self.h - v) % self.h).collect(),
            order: self.order,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// χ² = 1.
    pub fn is_quadratic(&self) -> bool {
        self.order <= 2
    }
}

/// All h characters of the group; index 0 is the trivial character.
pub fn characters(g: &ClassGroup) -> Vec<ClassCharacter> {
    let h = g.h();
    let hu = h as u32;
    // Grow a subgroup H one generator at a time, extending every character of H.
    let mut members: Vec<usize> = vec![0];
    let mut in_h = vec![false; h];
    in_h[0] = true;
    // characters on H as maps member-index -> exponent (stored on full group indices)
    let mut chars: Vec<HashMap<usize, u32>> = vec![HashMap::from([(0usize, 0u32)])];
    for gen in 0..h {
        if in_h[gen] {
            continue;
        }
        // smallest m with gen^m in H
        let mut m = 1usize;
        let mut pw = gen;
        while !in_h[pw] {
            pw = g.op(pw, gen);
            m += 1;
        }
        // coset powers gen^i, i < m
        let mut powers = vec![0usize];
        for i in 1..m {
            powers.push(g.op(powers[i - 1], gen));
        }
        let mut new_chars = Vec::new();
        for psi in &chars {
            let v = psi[&pw];
            debug_assert_eq!(v as usize % m, 0);
            let base = (v as usize / m) as u32;
            for j in 0..m as u32 {
                let t = (base + j * (hu / m as u32)) % hu;
                let mut chi = HashMap::new();
                for &x in &members {
                    for (i, &gp) in powers.iter().enumerate() {
                        let e = g.op(x, gp);
                        chi.insert(e, (psi[&x] + i as u32 * t) % hu);
                    }
                }
                new_chars.push(chi);
            }
        }
        let mut new_members = Vec::new();
        for &x in &members {
            for &gp in &powers {
                let e = g.op(x, gp);
                new_members.push(e);
                in_h[e] = true;
            }
        }
        members = new_members;
        chars = new_chars;
    }
    let mut out: Vec<ClassCharacter> = chars
        .into_iter()
        .map(|chi| {
            let values: Vec<u32> = (0..h).map(|i| chi[&i]).collect();
            let order = values
                .iter()
                .fold(1u32, |acc, &v| num_integer::lcm(acc, hu / num_integer::gcd(hu, v)));
            ClassCharacter { h: hu, values, order }
        })
        .collect();
    out.sort_by(|a, b| (a.order, &a.values).cmp(&(b.order, &b.values)));
    out
}

/// Coefficients r_χ(n), 1 ≤ n ≤ nmax, of θ_χ.
#[derive(Clone, Debug)]
pub struct ThetaSeries {
    pub character: ClassCharacter,
    pub nmax: usize,
    /// r[n] for n in 0..=nmax; r[0] is unused and zero.
    pub r: Vec<Cyclo>,
}

impl ThetaSeries {
    pub fn coeff(&self, n: usize) -> &Cyclo {
        &self.r[n]
    }
}

/// Number of ideals of norm n in each class, for n ≤ nmax (counts[class][n]).
pub fn ideal_counts(g: &ClassGroup, nmax: usize) -> Vec<Vec<u64>> {
    let w = g.disc.unit_count();
    let d = g.disc.0 as i64;
    g.elements
        .iter()
        .map(|f| {
            let mut reps = vec![0u64; nmax + 1];
            // a x² + bxy + c y² = (2ax + by)²/(4a) + d y²/(4a) ≤ nmax
            let nm = nmax as i64;
            let ymax = ((4 * f.a * nm) as f64 / d as f64).sqrt().floor() as i64 + 1;
            for y in -ymax..=ymax {
                let rest = 4 * f.a * nm - d * y * y;
                if rest < 0 {
                    continue;
                }
                let s = (rest as f64).sqrt().floor() as i64 + 1;
                let xlo = (-s - f.b * y).div_euclid(2 * f.a) - 1;
                let xhi = (s - f.b * y).div_euclid(2 * f.a) + 1;
                for x in xlo..=xhi {
                    let v = f.eval(x, y);
                    if v >= 1 && v <= nm {
                        reps[v as usize] += 1;
                    }
                }
            }
            reps.iter().map(|&r| r / w).collect()
        })
        .collect()
}

pub fn theta_coeffs(g: &ClassGroup, chi: &ClassCharacter, nmax: usize) -> ThetaSeries {
    let counts = ideal_counts(g, nmax);
    let vals: Vec<Cyclo> = (0..g.h()).map(|c| chi.eval(c)).collect();
    let r = (0..=nmax)
        .map(|n| {
            let mut acc = Cyclo::zero(chi.h);
            if n == 0 {
                return acc;
            }
            for c in 0..g.h() {
                if counts[c][n] != 0 {
                    acc = &acc + &vals[c].scale(&qi(counts[c][n] as i64));
                }
            }
            acc
        })
        .collect();
    ThetaSeries {
        character: chi.clone(),
        nmax,
        r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_examples() {
        assert!(is_fundamental(4));
        assert!(is_fundamental(23));
        assert!(!is_fundamental(12));
        assert!(is_fundamental(8));
        assert!(!is_fundamental(16));
        assert!(is_fundamental(3));
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(reduce_form(&QuadForm::new(1, 0, 1)).unwrap(), QuadForm::new(1, 0, 1));
        assert_eq!(reduce_form(&QuadForm::new(6, 1, 1)).unwrap(), QuadForm::new(1, 1, 6));
        assert_eq!(reduce_form(&QuadForm::new(2, -1, 3)).unwrap(), QuadForm::new(2, -1, 3));
        assert!(matches!(reduce_form(&QuadForm::new(1, 3, 1)), Err(Error::NotPositiveDefinite(_))));
        assert!(matches!(reduce_form(&QuadForm::new(-1, 0, -1)), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn reduction_witness_is_unimodular() {
        let f = QuadForm::new(37, 51, 18);
        let (r, m) = reduce_with_transform(&f).unwrap();
        assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
        assert_eq!(f.transform(&m), r);
        assert!(r.is_reduced());
    }

    #[test]
    fn composition_examples_d23() {
        let g = QuadForm::new(2, 1, 3);
        assert_eq!(compose(&g, &g).unwrap(), QuadForm::new(2, -1, 3));
        assert_eq!(compose(&g, &QuadForm::new(2, -1, 3)).unwrap(), QuadForm::new(1, 1, 6));
        let e = QuadForm::principal(23);
        assert_eq!(compose(&e, &g).unwrap(), g);
        assert!(matches!(compose(&g, &QuadForm::new(1, 0, 1)), Err(Error::DiscMismatch(_, _))));
        assert!(matches!(compose(&QuadForm::new(2, 0, 2), &QuadForm::new(1, 0, 4)), Err(Error::NotPrimitive(_))));
    }

    #[test]
    fn class_numbers() {
        assert_eq!(class_group(4, false).unwrap().h(), 1);
        assert_eq!(class_group(23, false).unwrap().h(), 3);
        assert_eq!(class_group(15, false).unwrap().h(), 2);
        assert_eq!(class_group(163, false).unwrap().h(), 1);
        assert!(matches!(class_group(12, false), Err(Error::NotFundamental(12))));
        assert_eq!(class_group(12, true).unwrap().h(), 1);
    }

    #[test]
    fn group_structure() {
        assert_eq!(class_group(23, false).unwrap().structure(), vec![3]);
        assert_eq!(class_group(84, false).unwrap().structure(), vec![2, 2]);
        assert_eq!(class_group(56, false).unwrap().structure(), vec![4]);
        assert_eq!(class_group(420, false).unwrap().structure(), vec![2, 2, 2]);
    }

    #[test]
    fn character_tables() {
        let g = class_group(23, false).unwrap();
        let chars = characters(&g);
        assert_eq!(chars.len(), 3);
        assert!(chars[0].is_trivial());
        assert!(chars[1..].iter().all(|c| c.order == 3));
        let g1 = class_group(4, false).unwrap();
        assert_eq!(characters(&g1).len(), 1);
    }

    #[test]
    fn theta_examples() {
        let g = class_group(4, false).unwrap();
        let chi = &characters(&g)[0];
        let th = theta_coeffs(&g, chi, 10);
        let r: Vec<_> = [1, 2, 3, 5].iter().map(|&n| th.coeff(n).as_rational().unwrap()).collect();
        assert_eq!(r, vec![qi(1), qi(1), qi(0), qi(2)]);

        let g = class_group(23, false).unwrap();
        let chi = characters(&g).into_iter().find(|c| c.order == 3).unwrap();
        let th = theta_coeffs(&g, &chi, 10);
        assert_eq!(th.coeff(2).as_rational(), Some(qi(-1)));
        // 5 is inert in Q(√-23)
        assert!(th.coeff(5).is_zero());
    }
}
