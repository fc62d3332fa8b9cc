//! Brandt matrices B(n) for n ≤ nmax, computed from one short-vector
//! enumeration per pair of ideal classes.
//!
//! In weight 2 the entry (i, j) is the number of x ∈ I_i Ī_j with
//! nrd(x) = n·nrd(I_i)nrd(I_j), divided by 2e_j. In weight 2k each entry becomes
//! a block: the sum of x ↦ P(x̄ y x) over the same vectors acting on harmonic
//! polynomials of degree k − 1, normalised by nrd(I_i Ī_j)^{k−1}. Only the image
//! of B(1), the vectors invariant under every unit group, carries modular forms.

use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::harmonic::HarmonicSpace;
use super::lattice::{find_vector, for_each_short_vector, int_element};
use super::order::EichlerOrderData;
use super::QuatAlgebra;
use crate::arith::linalg::{coordinates, mat_vec, rref, transpose, QMat, QVec};
use crate::arith::{prime_divisors, q128, qi, Q};
use crate::error::{Error, Result};

/// How a lattice vector contributes to a Brandt entry.
pub trait ThetaKernel: Send + Sync {
    fn name(&self) -> &'static str;
    /// Polynomial degree ν used for weight `w`.
    fn degree(&self, weight: u32) -> Result<u32>;
}

/// Plain vector counting; weight 2 only.
pub struct CountingKernel;

/// Harmonic polynomials of degree w/2 − 1 under conjugation.
pub struct HarmonicKernel;

impl ThetaKernel for CountingKernel {
    fn name(&self) -> &'static str {
        "counting"
    }
    fn degree(&self, weight: u32) -> Result<u32> {
        if weight != 2 {
            return Err(Error::Unsupported(format!("counting kernel needs weight 2, got {weight}")));
        }
        Ok(0)
    }
}

impl ThetaKernel for HarmonicKernel {
    fn name(&self) -> &'static str {
        "harmonic"
    }
    fn degree(&self, weight: u32) -> Result<u32> {
        if weight < 2 || weight % 2 != 0 {
            return Err(Error::Unsupported(format!("weight {weight} must be even and at least 2")));
        }
        Ok(weight / 2 - 1)
    }
}

pub fn kernel_registry() -> Vec<Box<dyn ThetaKernel>> {
    vec![Box::new(CountingKernel), Box::new(HarmonicKernel)]
}

pub fn kernel_by_name(name: &str) -> Result<Box<dyn ThetaKernel>> {
    kernel_registry()
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "theta kernel",
            name: name.to_string(),
        })
}

/// The default kernel for a weight: counting in weight 2, harmonic otherwise.
pub fn default_kernel(weight: u32) -> Box<dyn ThetaKernel> {
    if weight == 2 {
        Box::new(CountingKernel)
    } else {
        Box::new(HarmonicKernel)
    }
}

#[derive(Clone, Debug)]
pub struct BrandtSystem {
    pub order: EichlerOrderData,
    pub weight: u32,
    pub kernel: &'static str,
    pub harmonic: HarmonicSpace,
    pub nmax: u64,
    /// Full block matrices on (class, harmonic coordinate), indexed i·dim + t.
    pub matrices: BTreeMap<u64, QMat>,
    /// Basis (rows) of the image of B(1).
    pub invariant: Vec<QVec>,
    /// Atkin–Lehner operators W_p (I ↦ I·J_p) for p dividing the level.
    pub atkin_lehner: BTreeMap<u64, QMat>,
}

impl BrandtSystem {
    pub fn build(order: &EichlerOrderData, weight: u32, nmax: u64, kernel: &dyn ThetaKernel) -> Result<Self> {
        let nu = kernel.degree(weight)?;
        let alg = &order.algebra;
        let hs = HarmonicSpace::new(alg, nu);
        let d = hs.dim();
        let h = order.h();
        let pairs: Vec<(usize, usize)> = (0..h).flat_map(|i| (0..h).map(move |j| (i, j))).collect();
        let blocks: Vec<((usize, usize), Vec<Vec<Q>>)> = pairs
            .par_iter()
            .map(|&(i, j)| ((i, j), block_sums(order, &hs, i, j, nmax)))
            .collect();
        let mut matrices = BTreeMap::new();
        for n in 1..=nmax {
            let mut m = vec![vec![Q::zero(); h * d]; h * d];
            for ((i, j), b) in &blocks {
                let blk = &b[n as usize];
                for t in 0..d {
                    for s in 0..d {
                        m[i * d + t][j * d + s] = blk[t * d + s].clone();
                    }
                }
            }
            matrices.insert(n, m);
        }
        let invariant = if nmax >= 1 {
            column_space(&matrices[&1])
        } else {
            Vec::new()
        };
        let mut atkin_lehner = BTreeMap::new();
        for p in prime_divisors(order.level) {
            atkin_lehner.insert(p, atkin_lehner_matrix(order, &hs, p)?);
        }
        Ok(BrandtSystem {
            order: order.clone(),
            weight,
            kernel: kernel.name(),
            harmonic: hs,
            nmax,
            matrices,
            invariant,
            atkin_lehner,
        })
    }

    pub fn block_dim(&self) -> usize {
        self.harmonic.dim()
    }

    pub fn matrix(&self, n: u64) -> Option<&QMat> {
        self.matrices.get(&n)
    }

    /// Dimension of the space of quaternionic forms.
    pub fn dim(&self) -> usize {
        self.invariant.len()
    }

    /// Matrix of B(n) on the invariant subspace, in the basis `invariant` (acting on columns).
    pub fn restricted(&self, n: u64) -> Option<QMat> {
        let m = self.matrices.get(&n)?;
        let k = self.invariant.len();
        let mut out = vec![vec![Q::zero(); k]; k];
        for (c, v) in self.invariant.iter().enumerate() {
            let img = mat_vec(m, v);
            let co = coordinates(&self.invariant, &img).expect("invariant subspace is stable");
            for r in 0..k {
                out[r][c] = co[r].clone();
            }
        }
        Some(out)
    }

    /// Integer matrix for weight 2 (every entry counts sublattices).
    pub fn integer_matrix(&self, n: u64) -> Option<Vec<Vec<i64>>> {
        let m = self.matrices.get(&n)?;
        m.iter()
            .map(|r| {
                r.iter()
                    .map(|x| if x.is_integer() { x.to_integer().to_i64() } else { None })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mats: serde_json::Map<String, serde_json::Value> = self
            .matrices
            .iter()
            .map(|(n, m)| {
                let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
                (n.to_string(), serde_json::json!(rows))
            })
            .collect();
        serde_json::json!({
            "algebra": [self.order.algebra.a, self.order.algebra.b],
            "classes": self.order.h(),
            "e": self.order.unit_halves,
            "weight": self.weight,
            "kernel": self.kernel,
            "dimension": self.dim(),
            "matrices": mats,
        })
    }
}

/// Basis of the column space of a square matrix, as rows.
fn column_space(m: &QMat) -> Vec<QVec> {
    let mut t = transpose(m);
    let piv = rref(&mut t);
    t.truncate(piv.len());
    t
}

/// Block matrix of W_p: (Wφ)(i) = ρ(α)φ(j) / nrd(α)^ν where I_i J_p = α I_j.
fn atkin_lehner_matrix(order: &EichlerOrderData, hs: &HarmonicSpace, p: u64) -> Result<QMat> {
    let alg = &order.algebra;
    let jp = order.two_sided_ideal(p)?;
    let h = order.h();
    let d = hs.dim();
    let nu = hs.nu as i32;
    let mut m = vec![vec![Q::zero(); h * d]; h * d];
    for i in 0..h {
        let k = order.ideal_classes[i].mul(alg, &jp);
        let mut hit = None;
        for j in 0..h {
            let l = k.mul(alg, &order.ideal_classes[j].conj());
            if l.nrd(alg) != &order.ideal_norms[i] * &order.ideal_norms[j] * qi(p as i64) {
                continue;
            }
            if let Some(c) = find_vector(&l.int_gram(alg), 1) {
                hit = Some((j, l, c));
                break;
            }
        }
        let (j, l, c) = hit.ok_or_else(|| Error::HardFailure(format!("I_{i} J_{p} matches no class")))?;
        let (den, rows) = l.integral_basis();
        let x = int_element(&rows, &c);
        let r = hs.action_int(alg, &x);
        let norm = q128(den).pow(2 * nu) * l.nrd(alg).pow(nu);
        for t in 0..d {
            for s in 0..d {
                m[i * d + t][j * d + s] = q128(r[t * d + s]) / (&norm * qi(hs.pivot_scale[s] as i64));
            }
        }
    }
    Ok(m)
}

/// Per-n blocks (d×d, row-major) for the pair (i, j), n = 0..=nmax.
fn block_sums(order: &EichlerOrderData, hs: &HarmonicSpace, i: usize, j: usize, nmax: u64) -> Vec<Vec<Q>> {
    let alg: &QuatAlgebra = &order.algebra;
    let l = order.connecting_lattice(i, j);
    let nl = l.nrd(alg);
    let gram = l.int_gram(alg);
    let (den, rows) = l.integral_basis();
    let d = hs.dim();
    let nu = hs.nu;
    let mut acc = vec![vec![0i128; d * d]; nmax as usize + 1];
    for_each_short_vector(&gram, nmax as i64, |c, n| {
        if nu == 0 {
            acc[n as usize][0] += 1;
        } else {
            let x = int_element(&rows, c);
            let r = hs.action_int(alg, &x);
            for (a, v) in acc[n as usize].iter_mut().zip(r) {
                *a += v;
            }
        }
    });
    // divide by 2 e_j · den^{2ν} · nrd(L)^ν · pivot_scale[s]
    let ej = q128(2 * order.unit_halves[j] as i128);
    let mut norm = ej * q128(den).pow(2 * nu as i32) * nl.pow(nu as i32);
    if norm.is_zero() {
        norm = Q::one();
    }
    acc.into_iter()
        .map(|blk| {
            (0..d * d)
                .map(|idx| {
                    let s = idx % d;
                    q128(blk[idx]) / (&norm * qi(hs.pivot_scale[s] as i64))
                })
                .collect()
        })
        .collect()
}

/// The single matrix B(n) in weight w.
pub fn brandt(order: &EichlerOrderData, n: u64, w: u32) -> Result<QMat> {
    let sys = BrandtSystem::build(order, w, n, default_kernel(w).as_ref())?;
    Ok(sys.matrices[&n].clone())
}
