//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits nonzero if any
//! criterion fails. Criterion ids given on the command line restrict the run, for example
//! `cargo test --release --test acceptance -- A1 A4`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yoshida_cli::config::RunConfig;
use yoshida_cli::pipeline::run_pipeline;
use yoshida_core::arith::linalg::mat_mul;
use yoshida_core::arith::{is_squarefree, q, qi, Cyclo};
use yoshida_core::bessel_verify::{bessel_sums, odd_fundamental_upto, parseval_sides};
use yoshida_core::classfield::{characters, class_group, is_fundamental, theta_coeffs};
use yoshida_core::halfint::{extract_h, extract_h_from_table, fundamental_scan};
use yoshida_core::lfunc::{rankin_ldata, rankin_shape, AfeEngine, AfeParams, Cosine, Plain};
use yoshida_core::quaternion::brandt::{default_kernel, BrandtSystem};
use yoshida_core::quaternion::eigen::{newforms, select_pair, EigenSystem};
use yoshida_core::quaternion::order::{eichler_mass, eichler_order};
use yoshida_core::quaternion::qexp;
use yoshida_core::siegel::{
    build_yoshida, calibrate_shift, fourier_jacobi, prime_anchor, u_p, u_p_on, CoeffSource, EulerCheck, HalfIntMat, YoshidaLift,
};
use yoshida_core::Error;

// ---------------------------------------------------------------------------------------
// independent oracles

/// −d is a fundamental discriminant, straight from the definition.
fn fundamental_oracle(d: u64) -> bool {
    match d % 4 {
        3 => is_squarefree(d),
        0 => {
            let m = d / 4;
            (m % 4 == 1 || m % 4 == 2) && is_squarefree(m)
        }
        _ => false,
    }
}

/// Number of primitive reduced forms of discriminant −d, by enumeration.
fn class_number_oracle(d: u64) -> usize {
    let d = d as i64;
    let mut h = 0;
    let mut a = 1;
    while 3 * a * a <= d {
        for b in -a + 1..=a {
            let n = b * b + d;
            if n % (4 * a) != 0 {
                continue;
            }
            let c = n / (4 * a);
            if c < a || (b < 0 && a == c) {
                continue;
            }
            if num_integer::gcd(num_integer::gcd(a, b.abs()), c) == 1 {
                h += 1;
            }
        }
        a += 1;
    }
    h
}

/// q ∏ (1 − qⁿ)² (1 − q¹¹ⁿ)².
fn eta_product_11(nmax: usize) -> Vec<i128> {
    let mut p = vec![0i128; nmax + 1];
    p[0] = 1;
    for n in 1..=nmax {
        for step in [n, 11 * n] {
            if step > nmax {
                continue;
            }
            for _ in 0..2 {
                for i in (step..=nmax).rev() {
                    p[i] -= p[i - step];
                }
            }
        }
    }
    let mut out = vec![0i128; nmax + 1];
    out[1..].copy_from_slice(&p[..nmax]);
    out
}

// ---------------------------------------------------------------------------------------
// shared data

struct Flagship {
    f_system: BrandtSystem,
    f: EigenSystem,
    g: EigenSystem,
    level: u64,
    m1: u64,
}

/// The first equal-level pair of weights (6, 2) and odd level ≤ 50 from `select_pair`, with
/// the relaxed k = 1 search as fallback.
fn flagship() -> Result<Flagship> {
    let mut cands = select_pair((6, 2), 50, false, 13)?;
    if cands.is_empty() {
        cands = select_pair((2, 2), 50, true, 13)?;
    }
    let c = cands
        .into_iter()
        .filter(|c| c.n1 == c.n2 && c.n1 % 2 == 1)
        .min_by_key(|c| c.n1)
        .context("select_pair returned no usable pair")?;
    let m1 = c.m1_choices[0];
    let (f_system, _) = newforms(c.f.weight(), c.n1, 13)?;
    Ok(Flagship { f_system, f: c.f, g: c.g, level: c.n1, m1 })
}

/// The flagship, selected once and shared by the criteria that do not time the selection.
fn shared() -> Result<&'static Flagship> {
    static CELL: std::sync::OnceLock<Flagship> = std::sync::OnceLock::new();
    if let Some(f) = CELL.get() {
        return Ok(f);
    }
    let f = flagship()?;
    Ok(CELL.get_or_init(|| f))
}

fn random_unimodular(rng: &mut ChaCha8Rng) -> [[i64; 2]; 2] {
    let gens = [[[1, 1], [0, 1]], [[1, -1], [0, 1]], [[0, 1], [1, 0]], [[1, 0], [1, 1]], [[1, 0], [-1, 1]], [[-1, 0], [0, 1]]];
    let mut m = [[1i64, 0], [0, 1]];
    for _ in 0..rng.gen_range(1..6) {
        let g = gens[rng.gen_range(0..gens.len())];
        m = [
            [m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]],
            [m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]],
        ];
    }
    m
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

// ---------------------------------------------------------------------------------------
// criteria

fn a1() -> Result<String> {
    let mut count = 0;
    for d in 3..=10_000u64 {
        ensure!(is_fundamental(d) == fundamental_oracle(d), "fundamentality differs at d = {d}");
        if !fundamental_oracle(d) {
            continue;
        }
        let h = class_group(d, false)?.h();
        ensure!(h == class_number_oracle(d), "h(−{d}) = {h}, brute force gives {}", class_number_oracle(d));
        count += 1;
    }
    for d in [4u64, 15, 23, 163] {
        let g = class_group(d, false)?;
        let chars = characters(&g);
        let h = g.h();
        ensure!(chars.len() == h, "d = {d}: {} characters for h = {h}", chars.len());
        let zero = Cyclo::zero(h as u32);
        for (i, a) in chars.iter().enumerate() {
            for (j, b) in chars.iter().enumerate() {
                let s = (0..h).fold(zero.clone(), |acc, c| &acc + &(&a.eval(c) * &b.eval(c).conj()));
                ensure!(s.as_rational() == Some(qi(if i == j { h as i64 } else { 0 })), "d = {d}: rows {i}, {j} not orthogonal");
            }
        }
        for c1 in 0..h {
            for c2 in 0..h {
                let s = chars.iter().fold(zero.clone(), |acc, x| &acc + &(&x.eval(c1) * &x.eval(c2).conj()));
                ensure!(s.as_rational() == Some(qi(if c1 == c2 { h as i64 } else { 0 })), "d = {d}: columns {c1}, {c2} not orthogonal");
            }
        }
        for chi in &chars {
            let th = theta_coeffs(&g, chi, 500);
            for m in 1..=500usize {
                for n in 1..=500 / m {
                    if num_integer::gcd(m, n) == 1 && *th.coeff(m * n) != th.coeff(m) * th.coeff(n) {
                        bail!("d = {d}: r({}) ≠ r({m}) r({n})", m * n);
                    }
                }
            }
        }
    }
    Ok(format!("{count} fundamental discriminants; orthogonality and θ multiplicativity for d ∈ {{4, 15, 23, 163}}, n ≤ 500"))
}

fn a2() -> Result<String> {
    for (m1, level, expect) in [(11, 11, q(5, 12)), (11, 22, q(5, 4)), (2, 2, q(1, 24)), (2, 22, q(1, 2))] {
        let ord = eichler_order(m1, level)?;
        ensure!(ord.mass() == expect, "mass of M1 = {m1}, N = {level}: {} ≠ {expect}", ord.mass());
        ensure!(eichler_mass(m1, level) == expect, "closed form differs at M1 = {m1}, N = {level}");
    }
    for (m1, level) in [(11, 11), (11, 22), (2, 2)] {
        let ord = eichler_order(m1, level)?;
        let bs = BrandtSystem::build(&ord, 2, 132, default_kernel(2).as_ref())?;
        for m in 2..=12u64 {
            for n in m + 1..=12 {
                if num_integer::gcd(m, n) == 1 {
                    let prod = mat_mul(bs.matrix(m).unwrap(), bs.matrix(n).unwrap());
                    ensure!(&prod == bs.matrix(m * n).unwrap(), "M1 = {m1}, N = {level}: B({m})B({n}) ≠ B({})", m * n);
                }
            }
        }
    }
    let (bs, forms) = newforms(2, 11, 13)?;
    ensure!(forms.len() == 1, "expected one cuspidal system at level 11, found {}", forms.len());
    let a = qexp::coefficients(&bs.order, &forms[0], 50)?;
    let eta = eta_product_11(50);
    ensure!(a[1..=50] == eta[1..=50], "level 11 coefficients differ from η(τ)²η(11τ)²");
    Ok("masses 5/12, 5/4, 1/24, 1/2; B(m)B(n) = B(mn) for coprime m, n ≤ 12; η-product to n = 50".into())
}

fn a3() -> Result<String> {
    let start = Instant::now();
    let fl = single_threaded(flagship)?;
    let table = single_threaded(|| build_yoshida(&fl.f, &fl.g, fl.m1, 400))?;
    let single = start.elapsed().as_secs_f64();
    ensure!(!table.is_zero(), "table is zero");
    ensure!(single < 1800.0, "single-threaded selection and build took {single:.0}s");
    ensure!(fl.level == 19 && fl.f.weight() == 6, "unexpected flagship level {} weight {}", fl.level, fl.f.weight());

    let lift = YoshidaLift::new(&fl.f, &fl.g, fl.m1)?;
    let keys: Vec<HalfIntMat> = table.coeffs.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let t = keys[rng.gen_range(0..keys.len())];
        let a = random_unimodular(&mut rng);
        let moved = t.transform(&a);
        ensure!(lift.coeff(&moved)? == table.coeffs[&t], "a(F, T[A]) ≠ a(F, T) at T = {t}, A = {a:?}");
    }

    let mut ups = Vec::new();
    let deep = lift.table(1500);
    for p in yoshida_core::arith::prime_divisors(fl.level) {
        let from_table = u_p(&deep, p)?;
        let tests: Vec<HalfIntMat> = keys.iter().filter(|t| t.abs_disc() <= 40).copied().collect();
        let direct = u_p_on(&lift, p, &tests)?;
        ensure!(from_table == direct, "U({p}): table gives {from_table}, direct evaluation {direct}");
        ups.push(format!("U({p}) = {from_table}"));
    }

    let (_, fs) = newforms(6, 11, 13)?;
    let (_, gs) = newforms(2, 11, 13)?;
    match build_yoshida(&fs[0], &gs[0], 11, 60) {
        Err(Error::AtkinLehnerMismatch(11)) => {}
        other => bail!("mismatched pair at level 11 gave {:?}", other.map(|t| t.coeffs.len())),
    }

    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let speed = if cores >= 8 {
        let t8 = Instant::now();
        rayon::ThreadPoolBuilder::new().num_threads(8).build()?.install(|| build_yoshida(&fl.f, &fl.g, fl.m1, 400))?;
        let t1 = Instant::now();
        single_threaded(|| build_yoshida(&fl.f, &fl.g, fl.m1, 400))?;
        let (w1, w8) = (t1.elapsed().as_secs_f64(), (t1 - t8).as_secs_f64());
        ensure!(w1 / w8 >= 5.0, "speedup at 8 threads is {:.2}", w1 / w8);
        format!("speedup {:.1}x at 8 threads", w1 / w8)
    } else {
        format!("speedup gate not measurable: {cores} core(s) available")
    };
    Ok(format!(
        "N = {}, {} keys, 1000 GL2 moves, {}, AL mismatch rejected, {single:.1}s single-threaded; {speed}",
        fl.level,
        table.coeffs.len(),
        ups.join(" ")
    ))
}

fn a4() -> Result<String> {
    let fl = shared()?;
    let lift = YoshidaLift::new(&fl.f, &fl.g, fl.m1)?;
    let table = lift.table(60);
    let tests: Vec<HalfIntMat> = table.nonzero().map(|(t, _)| *t).take(2).collect();
    let s0 = calibrate_shift(&lift, &fl.f, &fl.g, 2, &tests)?.context("no unique shift at q = 2")?;
    for q in [3u64, 5] {
        let c = EulerCheck::run(&lift, &fl.f, &fl.g, q, s0, &tests)?;
        ensure!(c.matches, "q = {q}: spin {:?} ≠ product {:?}", c.spin, c.product);
    }
    Ok(format!("shift s0 = {s0} from q = 2; exact at q = 3, 5"))
}

fn a5() -> Result<String> {
    let fl = shared()?;
    let table = build_yoshida(&fl.f, &fl.g, fl.m1, 400)?;
    let (p, t) = prime_anchor(&table, 50)?;
    let h = extract_h(&fourier_jacobi(&table, p as i64)?, 400)?;
    let d0 = t.abs_disc();
    ensure!(h.coeff(d0) == table.get(&t)? * qi(2), "c({d0}) ≠ 2a(F, T′)");
    ensure!(h == extract_h_from_table(&table, p, 400)?, "slice and direct table extraction differ");
    let scan = fundamental_scan(&h, &table, 200)?;
    ensure!(!scan.hits.is_empty(), "fundamental_scan(200) is empty");
    Ok(format!("anchor p = {p}, T′ = {t}, c({d0}) = {}; {} hits ≤ 200", h.coeff(d0), scan.hits.len()))
}

fn a6() -> Result<String> {
    let fl = shared()?;
    let engine = AfeEngine::new(AfeParams { tol: 1e-10, ..AfeParams::default() });
    let points = [Complex64::new(0.6, 0.0), Complex64::new(0.5, 0.3)];
    let d = 23;
    let shape = rankin_shape(6, fl.level, d)?;
    let mut need = engine.terms_needed(&shape, Complex64::new(0.5, 0.0))?;
    for s in points.iter().flat_map(|s| [*s, s.conj()]) {
        need = need.max(engine.required_terms(&shape, s, &Plain)).max(engine.required_terms(&shape, s, &Cosine::default()));
    }
    let nmax = 2 * need;
    let af = qexp::coefficients(&fl.f_system.order, &fl.f, nmax as u64)?;
    let g = class_group(d, false)?;
    let chars = characters(&g);
    let l1 = rankin_ldata(&af, 6, fl.level, &g, &chars[1], nmax)?;
    let l2 = rankin_ldata(&af, 6, fl.level, &g, &chars[2], nmax)?;

    let (sign, _) = engine.solve_sign(&l1)?;
    let mut worst: f64 = 0.0;
    for s in points {
        let r = engine.fe_residual(&l1, s, sign)?;
        ensure!(r < 1e-8, "FE residual {r:e} at s = {s}");
        worst = worst.max(r);
    }

    let half = Complex64::new(0.5, 0.0);
    let base = engine.eval(&l1, half)?;
    let doubled = AfeEngine::new(AfeParams { terms: Some(2 * base.terms), ..engine.params.clone() }).eval(&l1, half)?;
    let drift = (base.value() - doubled.value()).norm();
    ensure!(drift <= base.error_bound + doubled.error_bound, "doubling the cutoff moved L(1/2) by {drift:e}");

    for s in [half, points[1]] {
        let a = engine.eval(&l1, s)?;
        let b = engine.eval(&l2, s.conj())?;
        let gap = (a.value() - b.value().conj()).norm();
        ensure!(gap <= a.error_bound + b.error_bound, "χ and χ⁻¹ differ by {gap:e} at s = {s}");
    }
    Ok(format!("ε = {}, max FE residual {worst:.1e}, doubling drift {drift:.1e}", sign.re))
}

/// Runs the whole pipeline on a fresh cache with `threads` workers.
fn pipeline_run(cache: &Path, threads: usize) -> Result<(yoshida_cli::pipeline::Artifacts, RunConfig, f64)> {
    let cfg = RunConfig { cache_dir: cache.to_path_buf(), threads, ..RunConfig::default() };
    let start = Instant::now();
    let art = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?.install(|| run_pipeline(&cfg))?;
    Ok((art, cfg, start.elapsed().as_secs_f64()))
}

fn a7(cache: &Path) -> Result<String> {
    let (art, cfg, secs) = pipeline_run(cache, 1)?;
    ensure!(secs < 3600.0, "end-to-end run took {secs:.0}s");
    ensure!(art.hard_failures == 0, "{} hard failure(s)", art.hard_failures);
    ensure!(!art.members.is_empty(), "no member d ≤ {}", cfg.dmax);

    let density: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(art.dir.join("density.json"))?)?;
    let checked: BTreeSet<u64> = serde_json::from_value(density["parseval_checked"].clone())?;
    let table = yoshida_cli::pipeline::load_table(&art.dir.join("table.ycf"))?;
    let mut scanned = 0;
    for d in odd_fundamental_upto(cfg.dmax) {
        if d % cfg.level == 0 {
            continue;
        }
        ensure!(checked.contains(&d), "Parseval not recorded for d = {d}");
        let r = bessel_sums(&table, d)?;
        let (lhs, rhs) = parseval_sides(&r);
        ensure!(lhs == rhs, "Parseval fails at d = {d}");
        scanned += 1;
    }

    let ptb = std::fs::read_to_string(art.dir.join("ptb.csv"))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(ptb.as_bytes());
    let mut certified: BTreeMap<u64, usize> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        if &row[5] != "NONZERO" {
            bail!("row {:?} is not NONZERO", row);
        }
        let (d, chi): (u64, usize) = (row[0].parse()?, row[1].parse()?);
        ensure!(!bessel_sums(&table, d)?.per_chi[chi].is_zero(), "B_χ = 0 at d = {d}, χ = {chi}");
        *certified.entry(d).or_default() += 1;
    }
    ensure!(certified.keys().copied().collect::<Vec<_>>() == art.members, "ptb.csv and the member list disagree");
    let first = art.members[0];
    Ok(format!(
        "{} members ≤ {} (smallest {first}), {} certified (d, χ), Parseval exact for {scanned} d, {secs:.0}s",
        art.members.len(),
        cfg.dmax,
        certified.values().sum::<usize>()
    ))
}

fn a8(first: &Path, second: &Path) -> Result<String> {
    let (a1, _, _) = if first.join("runs").exists() { reuse(first)? } else { pipeline_run(first, 1)? };
    let (a8, _, secs) = pipeline_run(second, 8)?;
    let mut compared = Vec::new();
    for p in &a1.files {
        let name = p.file_name().unwrap();
        let other = a8.dir.join(name);
        let (x, y) = (std::fs::read(p)?, std::fs::read(&other).with_context(|| format!("missing {}", other.display()))?);
        ensure!(x == y, "{} differs between 1 and 8 threads", name.to_string_lossy());
        compared.push(name.to_string_lossy().into_owned());
    }
    ensure!(compared.iter().any(|n| n.ends_with(".ycf")) && compared.iter().any(|n| n.ends_with(".csv")), "nothing to compare");
    Ok(format!("{} byte-identical: {} (8-thread run {secs:.0}s)", compared.len(), compared.join(", ")))
}

/// The artifacts of the earlier single-threaded run.
fn reuse(cache: &Path) -> Result<(yoshida_cli::pipeline::Artifacts, RunConfig, f64)> {
    let cfg = RunConfig { cache_dir: cache.to_path_buf(), threads: 1, ..RunConfig::default() };
    let dir = cache.join("runs").join(cfg.hash());
    let mut files: Vec<_> = std::fs::read_dir(&dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    files.sort();
    Ok((yoshida_cli::pipeline::Artifacts { dir, files, members: vec![], hard_failures: 0, scan_hits: vec![] }, cfg, 0.0))
}

fn main() {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let run = |id: &str| wanted.is_empty() || wanted.iter().any(|w| w == id);
    let caches = (tempfile::tempdir().expect("temp dir"), tempfile::tempdir().expect("temp dir"));
    let criteria: Vec<(&str, &str, Box<dyn Fn() -> Result<String>>)> = vec![
        ("A1", "class-field suite", Box::new(a1)),
        ("A2", "Brandt suite", Box::new(a2)),
        ("A3", "Yoshida build", Box::new(a3)),
        ("A4", "Euler-factor identity", Box::new(a4)),
        ("A5", "half-integral pipeline", Box::new(a5)),
        ("A6", "L-engine", Box::new(a6)),
        ("A7", "end-to-end nonvanishing", Box::new(|| a7(caches.0.path()))),
        ("A8", "determinism across thread counts", Box::new(|| a8(caches.0.path(), caches.1.path()))),
    ];
    let mut failed = 0;
    for (id, name, f) in &criteria {
        if !run(id) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS {name} ({secs:.1}s): {detail}"),
            Err(e) => {
                failed += 1;
                println!("{id} FAIL {name} ({secs:.1}s): {e:#}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
