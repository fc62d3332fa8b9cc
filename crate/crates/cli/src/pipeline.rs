//! The end-to-end run: pair selection, lift, U(p) and Euler checks, half-integral
//! extraction, Bessel sums, central values and the density scan.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde::Serialize;
use yoshida_core::arith::{gcd_i64, prime_divisors};
use yoshida_core::bessel_verify::{bessel_sums, density_scan, odd_fundamental_upto, DensityRecord, NewformCoeffs, ScanEntry};
use yoshida_core::classfield::is_fundamental;
use yoshida_core::halfint::{extract_h, fundamental_scan, ScanReport};
use yoshida_core::lfunc::{rankin_shape, AfeEngine, AfeParams};
use yoshida_core::quaternion::brandt::BrandtSystem;
use yoshida_core::quaternion::eigen::{newforms, EigenSystem};
use yoshida_core::siegel::{fourier_jacobi, prime_anchor, u_p, SiegelCoeffTable, KERNEL_VERSION};

use crate::cache::{emit_file, Cache};
use crate::config::RunConfig;

/// Structured progress line on stderr: stage, wall time and a few counts.
pub fn stage_log(stage: &str, start: Instant, detail: &str) {
    log::info!("stage={stage} wall={:.3}s {detail}", start.elapsed().as_secs_f64());
}

pub struct Form {
    pub label: String,
    pub system: BrandtSystem,
    pub eigen: EigenSystem,
}

/// `w.N.i`: the i-th rational cuspidal newform of weight w and level N.
pub fn parse_label(label: &str) -> Result<(u32, u64, usize)> {
    let parts: Vec<&str> = label.split('.').collect();
    if parts.len() != 3 {
        bail!("form label {label} is not of the shape weight.level.index");
    }
    Ok((parts[0].parse()?, parts[1].parse()?, parts[2].parse()?))
}

pub fn form_by_label(label: &str, qmax: u64) -> Result<Form> {
    let (w, n, i) = parse_label(label)?;
    let (system, forms) = newforms(w, n, qmax)?;
    let eigen = forms.get(i).cloned().ok_or_else(|| anyhow!("level {n} weight {w} has {} rational newforms, no index {i}", forms.len()))?;
    Ok(Form { label: label.to_string(), system, eigen })
}

pub struct Pair {
    pub f: Form,
    pub g: Form,
    pub m1: u64,
}

/// The configured pair, or the first (g, f) with matching Atkin–Lehner signs.
pub fn select(cfg: &RunConfig) -> Result<Pair> {
    let n = cfg.level;
    let (fsys, fs) = newforms(cfg.weight, n, cfg.qmax)?;
    let (gsys, gs) = newforms(2, n, cfg.qmax)?;
    let (fi, gi) = match (cfg.f, cfg.g) {
        (Some(i), Some(j)) => (i, j),
        (fi, gi) => {
            let found = gs.iter().enumerate().filter(|(j, _)| gi.map_or(true, |x| x == *j)).find_map(|(j, g)| {
                fs.iter()
                    .enumerate()
                    .filter(|(i, _)| fi.map_or(true, |x| x == *i))
                    .find(|(_, f)| f.al_signs == g.al_signs)
                    .map(|(i, _)| (i, j))
            });
            found.ok_or_else(|| anyhow!("no Atkin-Lehner compatible pair of weights ({}, 2) at level {n}", cfg.weight))?
        }
    };
    let f = fs.get(fi).cloned().ok_or_else(|| anyhow!("no newform {fi} of weight {} at level {n}", cfg.weight))?;
    let g = gs.get(gi).cloned().ok_or_else(|| anyhow!("no newform {gi} of weight 2 at level {n}"))?;
    let m1 = match cfg.m1 {
        Some(m) => m,
        None => *prime_divisors(n).first().context("level has no prime divisor")?,
    };
    Ok(Pair {
        f: Form { label: format!("{}.{n}.{fi}", cfg.weight), system: fsys, eigen: f },
        g: Form { label: format!("2.{n}.{gi}"), system: gsys, eigen: g },
        m1,
    })
}

pub fn afe_params(cfg: &RunConfig) -> AfeParams {
    AfeParams { smoother: cfg.smoother.clone(), tol: cfg.tol, ..AfeParams::default() }
}

/// Coefficients needed to evaluate every L(½, f × θ_χ) with d in `ds`.
pub fn terms_for(weight: u32, level: u64, ds: &[u64], params: &AfeParams) -> Result<usize> {
    let engine = AfeEngine::new(params.clone());
    let mut need = 16;
    for &d in ds {
        if gcd_i64(d as i64, level as i64) > 1 {
            continue;
        }
        let l = rankin_shape(weight, level, d)?;
        need = need.max(engine.terms_needed(&l, Complex64::new(0.5, 0.0))?);
    }
    Ok(need)
}

pub fn newform_coeffs(cache: &Cache, form: &Form, nmax: usize) -> Result<NewformCoeffs> {
    let start = Instant::now();
    let (a, hit) = cache.qexp(&form.label, &form.system.order, &form.eigen, nmax)?;
    stage_log("qexp", start, &format!("form={} nmax={nmax} cached={hit}", form.label));
    Ok(NewformCoeffs { label: form.label.clone(), weight: form.eigen.weight(), level: form.eigen.level(), a })
}

fn header(cfg: &RunConfig) -> String {
    format!("# config={} kernel={KERNEL_VERSION}\n", cfg.hash())
}

fn csv_body(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    rows(&mut w)?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

pub fn halfint_csv(cfg: &RunConfig, scan: &ScanReport, values: &BTreeMap<i64, String>) -> Result<String> {
    let body = csv_body(|w| {
        w.write_record(["d", "c_num", "c_den", "witness_a", "witness_b", "witness_c"])?;
        for d in &scan.hits {
            let wit = &scan.witness[d];
            let (num, den) = values[d].split_once('/').unwrap_or((&values[d], "1"));
            w.write_record([d.to_string(), num.into(), den.into(), wit.matrix.a.to_string(), wit.matrix.b.to_string(), wit.matrix.c.to_string()])?;
        }
        Ok(())
    })?;
    Ok(header(cfg) + &body)
}

/// One row per (d, χ) over fundamental d ≤ dmax, with B_χ exactly.
pub fn bessel_csv(cfg: &RunConfig, table: &SiegelCoeffTable, dmax: u64) -> Result<String> {
    let body = csv_body(|w| {
        w.write_record(["d", "h", "chi_index", "B", "B_nonzero"])?;
        for d in (3..=dmax).filter(|&d| is_fundamental(d)) {
            let r = bessel_sums(table, d)?;
            for (i, b) in r.per_chi.iter().enumerate() {
                w.write_record([d.to_string(), r.h.to_string(), i.to_string(), b.to_string(), (!b.is_zero()).to_string()])?;
            }
        }
        Ok(())
    })?;
    Ok(header(cfg) + &body)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn ptb_csv(cfg: &RunConfig, rec: &DensityRecord) -> Result<String> {
    let body = csv_body(|w| {
        w.write_record(["d", "chi_index", "B_nonzero", "Lf_value", "Lg_value", "verdict", "Lf_err", "Lg_err"])?;
        for v in &rec.verdicts {
            let p = &v.primary;
            let verdict = if p.both_nonzero() { "NONZERO" } else { "INCONCLUSIVE" };
            w.write_record([
                v.d.to_string(),
                v.chi.to_string(),
                "true".into(),
                fmt_f(p.lf.value[0]),
                fmt_f(p.lg.value[0]),
                verdict.into(),
                format!("{:.3e}", p.lf.error_bound),
                format!("{:.3e}", p.lg.error_bound),
            ])?;
        }
        for (d, reason) in rec.hard_failures() {
            w.write_record([d.to_string(), String::new(), "true".into(), String::new(), String::new(), format!("HARD_FAILURE: {reason}"), String::new(), String::new()])?;
        }
        Ok(())
    })?;
    Ok(header(cfg) + &body)
}

/// The χ versus χ⁻¹ experiment: both orientations side by side.
pub fn orientation_csv(cfg: &RunConfig, rec: &DensityRecord) -> Result<String> {
    let body = csv_body(|w| {
        w.write_record(["d", "chi_index", "inverse_index", "Lf_inverse", "Lf_same", "Lg_inverse", "Lg_same"])?;
        for v in &rec.verdicts {
            let (p, o) = (&v.primary, &v.opposite);
            w.write_record([
                v.d.to_string(),
                v.chi.to_string(),
                p.psi.to_string(),
                fmt_f(p.lf.value[0]),
                fmt_f(o.lf.value[0]),
                fmt_f(p.lg.value[0]),
                fmt_f(o.lg.value[0]),
            ])?;
        }
        Ok(())
    })?;
    Ok(header(cfg) + &body)
}

#[derive(Serialize)]
struct DensityJson<'a> {
    config: String,
    kernel: &'static str,
    f: &'a str,
    g: &'a str,
    #[serde(flatten)]
    record: &'a DensityRecord,
}

pub fn density_json(cfg: &RunConfig, f: &str, g: &str, rec: &DensityRecord) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&DensityJson { config: cfg.hash(), kernel: KERNEL_VERSION, f, g, record: rec })?;
    s.push('\n');
    Ok(s)
}

/// What a run produced, with the paths of its files.
#[derive(Debug)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub members: Vec<u64>,
    pub hard_failures: usize,
    pub scan_hits: Vec<i64>,
}

/// Runs every stage and writes the artifacts under `<cache>/runs/<config hash>/`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let cache = Cache::new(&cfg.cache_dir);
    let out = cfg.cache_dir.join("runs").join(cfg.hash());
    let t0 = Instant::now();

    let start = Instant::now();
    let pair = select(cfg).context("stage select_pair")?;
    stage_log("select_pair", start, &format!("f={} g={} m1={}", pair.f.label, pair.g.label, pair.m1));

    let start = Instant::now();
    let (table, _, hit) = cache.table(&pair.f.eigen, &pair.g.eigen, pair.m1, cfg.disc_bound).context("stage build_yoshida")?;
    stage_log("build_yoshida", start, &format!("keys={} nonzero={} cached={hit}", table.coeffs.len(), table.nonzero().count()));

    let start = Instant::now();
    let mut ups = Vec::new();
    for p in prime_divisors(cfg.level) {
        match u_p(&table, p) {
            Ok(l) => ups.push(format!("U({p})={l}")),
            Err(yoshida_core::Error::InsufficientDepth(_)) => ups.push(format!("U({p})=untestable")),
            Err(e) => return Err(e).context("stage u_p"),
        }
    }
    stage_log("u_p", start, &ups.join(" "));

    let start = Instant::now();
    let (p, anchor) = match cfg.anchor {
        None => {
            let (p, t) = prime_anchor(&table, cfg.anchor_search).context("stage prime_anchor")?;
            (p, Some(t))
        }
        Some(p) => (p, None),
    };
    let slice = fourier_jacobi(&table, p as i64).context("stage fourier_jacobi")?;
    let h = extract_h(&slice, cfg.xmax).context("stage extract_h")?;
    if let Some(t) = anchor {
        let d0 = t.abs_disc();
        let expect = table.get(&t)? * yoshida_core::arith::qi(2);
        if h.coeff(d0) != expect {
            bail!("stage extract_h: c({d0}) = {} but 2a(F, T') = {expect}", h.coeff(d0));
        }
    }
    let scan = fundamental_scan(&h, &table, cfg.xmax.min(cfg.dmax as i64)).context("stage fundamental_scan")?;
    stage_log("halfint", start, &format!("anchor={p} hits={}", scan.hits.len()));
    let values: BTreeMap<i64, String> = scan.hits.iter().map(|d| (*d, h.coeff(*d).to_string())).collect();

    let start = Instant::now();
    let bessel = bessel_csv(cfg, &table, cfg.dmax)?;
    stage_log("bessel", start, "");

    let params = afe_params(cfg);
    let ds = odd_fundamental_upto(cfg.dmax);
    let nf = terms_for(pair.f.eigen.weight(), cfg.level, &ds, &params)?;
    let ng = terms_for(2, cfg.level, &ds, &params)?;
    let fc = newform_coeffs(&cache, &pair.f, nf)?;
    let gc = newform_coeffs(&cache, &pair.g, ng)?;

    let start = Instant::now();
    let rec = density_scan(&table, &fc, &gc, cfg.dmax, cfg.floor, &params).context("stage density_scan")?;
    let failures = rec.hard_failures().len();
    stage_log("density_scan", start, &format!("scanned={} members={} hard_failures={failures}", rec.per_d.len(), rec.members.len()));

    let mut files = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = out.join(name);
        emit_file(&path, bytes)?;
        files.push(path);
        Ok(())
    };
    put("table.ycf", table.to_ycf().as_bytes())?;
    put("halfint.csv", halfint_csv(cfg, &scan, &values)?.as_bytes())?;
    put("bessel.csv", bessel.as_bytes())?;
    put("ptb.csv", ptb_csv(cfg, &rec)?.as_bytes())?;
    put("orientation.csv", orientation_csv(cfg, &rec)?.as_bytes())?;
    put("density.json", density_json(cfg, &pair.f.label, &pair.g.label, &rec)?.as_bytes())?;
    put("config.txt", cfg.canonical().as_bytes())?;
    stage_log("pipeline", t0, &format!("out={}", out.display()));
    Ok(Artifacts { dir: out, files, members: rec.members.clone(), hard_failures: failures, scan_hits: scan.hits })
}

/// Human-readable summary of a density record.
pub fn density_summary(rec: &DensityRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "X = {}: {} member(s) {:?}", rec.x, rec.members.len(), rec.members);
    for (d, e) in &rec.per_d {
        if let ScanEntry::Certified { member, .. } = e {
            let _ = writeln!(s, "  d = {d}: chi{} Lf = {:.6} Lg = {:.6}", member.chi, member.lf[0], member.lg[0]);
        }
    }
    for (delta, v) in &rec.reference {
        let _ = writeln!(s, "  reference X^{delta} = {v:.2}");
    }
    s
}

pub fn load_table(path: &Path) -> Result<SiegelCoeffTable> {
    SiegelCoeffTable::read_ycf(path).with_context(|| format!("reading {}", path.display()))
}
