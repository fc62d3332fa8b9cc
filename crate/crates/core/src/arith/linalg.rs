//! Dense exact linear algebra over Q, integer lattice bases (Hermite normal form),
//! and kernels over prime fields.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{common_denominator, Q};

pub type QMat = Vec<Vec<Q>>;
pub type QVec = Vec<Q>;

pub fn zeros(r: usize, c: usize) -> QMat {
    vec![vec![Q::zero(); c]; r]
}

pub fn identity(n: usize) -> QMat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn mat_mul(a: &QMat, b: &QMat) -> QMat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = zeros(n, m);
    for i in 0..n {
        for t in 0..k {
            if a[i][t].is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[t][j].is_zero() {
                    out[i][j] += &a[i][t] * &b[t][j];
                }
            }
        }
    }
    out
}

pub fn mat_vec(a: &QMat, v: &[Q]) -> QVec {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .filter(|(x, y)| !x.is_zero() && !y.is_zero())
                .fold(Q::zero(), |acc, (x, y)| acc + x * y)
        })
        .collect()
}

pub fn transpose(a: &QMat) -> QMat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_sub_scalar(a: &QMat, s: &Q) -> QMat {
    let mut m = a.clone();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= s;
    }
    m
}

/// Reduced row echelon form; returns the pivot columns.
pub fn rref(a: &mut QMat) -> Vec<usize> {
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = Q::one() / &a[r][c];
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    if !a[r][j].is_zero() {
                        let t = &f * &a[r][j];
                        a[i][j] -= t;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &QMat) -> usize {
    let mut m = a.clone();
    rref(&mut m).len()
}

/// Basis of the right kernel {v : A v = 0}.
pub fn kernel(a: &QMat, ncols: usize) -> Vec<QVec> {
    let mut m = a.clone();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Characteristic polynomial det(xI - A), coefficients constant-term first
/// (Faddeev–LeVerrier).
pub fn charpoly(a: &QMat) -> Vec<Q> {
    let n = a.len();
    let mut coeffs = vec![Q::zero(); n + 1];
    coeffs[n] = Q::one();
    let mut m = zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut mk = mat_mul(a, &m);
        for (i, row) in mk.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        let am = mat_mul(a, &mk);
        let tr: Q = (0..n).fold(Q::zero(), |acc, i| acc + &am[i][i]);
        coeffs[n - k] = -tr / Q::from_integer(BigInt::from(k as i64));
        m = mk;
    }
    coeffs
}

/// Inverse of a square matrix, `None` if singular.
pub fn inverse(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut aug: QMat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Express `v` in terms of the rows of `basis` (which must be independent and span v).
pub fn coordinates(basis: &[QVec], v: &[Q]) -> Option<QVec> {
    let k = basis.len();
    let n = v.len();
    // Solve Σ c_i basis_i = v, i.e. (basisᵀ) c = v.
    let mut aug: QMat = (0..n)
        .map(|j| {
            let mut r: QVec = basis.iter().map(|b| b[j].clone()).collect();
            r.push(v[j].clone());
            r
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.contains(&k) {
        return None;
    }
    let mut c = vec![Q::zero(); k];
    for (r, &pc) in piv.iter().enumerate() {
        c[pc] = aug[r][k].clone();
    }
    Some(c)
}

/// Hermite normal form basis of the Z-lattice spanned by integer rows.
/// Output rows are upper triangular with positive pivots and reduced entries above pivots.
pub fn hnf_rows(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let ncols = rows[0].len();
    let mut m: Vec<Vec<BigInt>> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    for c in 0..ncols {
        // Euclid on column c among remaining rows.
        loop {
            let nz: Vec<usize> = (0..m.len()).filter(|&i| !m[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&i| m[i][c].abs()).unwrap();
            for &i in &nz {
                if i == piv {
                    continue;
                }
                let f = m[i][c].div_floor(&m[piv][c]);
                let prow = m[piv].clone();
                for (x, y) in m[i].iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
        if let Some(idx) = (0..m.len()).find(|&i| !m[i][c].is_zero()) {
            let mut row = m.remove(idx);
            if row[c].is_negative() {
                for x in row.iter_mut() {
                    *x = -x.clone();
                }
            }
            out.push(row);
        }
        m.retain(|r| r.iter().any(|x| !x.is_zero()));
    }
    // Reduce entries above pivots.
    for i in 0..out.len() {
        let pc = out[i].iter().position(|x| !x.is_zero()).unwrap();
        for j in 0..i {
            let f = out[j][pc].div_floor(&out[i][pc]);
            if !f.is_zero() {
                let prow = out[i].clone();
                for (x, y) in out[j].iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
    }
    out
}

/// Z-basis (in HNF) of the lattice generated by rational row vectors.
pub fn lattice_basis(gens: &[QVec]) -> Vec<QVec> {
    let den = common_denominator(gens.iter().flatten());
    let den_q = Q::from_integer(den.clone());
    let ints: Vec<Vec<BigInt>> = gens
        .iter()
        .map(|r| r.iter().map(|x| (x * &den_q).to_integer()).collect())
        .collect();
    hnf_rows(&ints)
        .into_iter()
        .map(|r| r.into_iter().map(|x| Q::new(x, den.clone())).collect())
        .collect()
}

/// Determinant of a square rational matrix.
pub fn det(a: &QMat) -> Q {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[c][c];
                for j in c..n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    d
}

/// Right kernel of an integer matrix over F_p, as vectors with entries in [0, p).
pub fn kernel_mod_p(a: &[Vec<i64>], ncols: usize, p: i64) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = a.iter().map(|r| r.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    let rows = m.len();
    let inv = |x: i64| super::pow_mod(x as u64, (p - 2) as u64, p as u64) as i64;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, pr);
        let iv = inv(m[r][c]);
        for x in m[r].iter_mut() {
            *x = *x * iv % p;
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..ncols {
                    m[i][j] = (m[i][j] - f * m[r][j]).rem_euclid(p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..ncols)
        .filter(|c| !pivots.contains(c))
        .map(|f| {
            let mut v = vec![0i64; ncols];
            v[f] = 1;
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = (-m[ri][f]).rem_euclid(p);
            }
            v
        })
        .collect()
}

pub fn gcd_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}
