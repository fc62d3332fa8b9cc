use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;
use yoshida_cli::cache::{emit_file, Cache};
use yoshida_cli::config::{Emit, RunConfig};
use yoshida_cli::pipeline::{self, stage_log};
use yoshida_core::bessel_verify::{density_scan, Verdict};
use yoshida_core::classfield::{characters, class_group};
use yoshida_core::halfint::{extract_h, fundamental_scan};
use yoshida_core::lfunc::{rankin_ldata, rankin_shape, AfeEngine};
use yoshida_core::quaternion::brandt::{default_kernel, BrandtSystem};
use yoshida_core::quaternion::eigen::decompose;
use yoshida_core::quaternion::order::eichler_order;
use yoshida_core::siegel::{fourier_jacobi, prime_anchor, u_p, KERNEL_VERSION};

#[derive(Parser)]
#[command(name = "ylift", version, about = "Yoshida lifts, Bessel sums and twisted central L-values")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    emit: Option<Emit>,
    /// Extra configuration overrides, key=value.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduced forms, group structure and characters of Cl(−d).
    Classgroup {
        #[arg(long)]
        disc: u64,
    },
    /// Brandt matrices and eigensystems of an Eichler order.
    Brandt {
        #[arg(long)]
        ramified: u64,
        #[arg(long)]
        level: u64,
        #[arg(long, default_value_t = 2)]
        weight: u32,
        #[arg(long, default_value_t = 5)]
        nmax: u64,
    },
    #[command(subcommand)]
    Yoshida(YoshidaCmd),
    /// The half-integral weight series of a Fourier–Jacobi coefficient and its scan.
    Halfint {
        #[command(flatten)]
        table: TableArg,
        /// "auto" or a prime.
        #[arg(long, default_value = "auto")]
        anchor: String,
        #[arg(long)]
        xmax: Option<i64>,
    },
    /// A central value L(½, f × θ_χ).
    Lvalue {
        /// Form label weight.level.index.
        #[arg(long)]
        f: String,
        #[arg(long)]
        disc: u64,
        #[arg(long)]
        chi: usize,
        #[arg(long)]
        prec: Option<f64>,
    },
    #[command(subcommand)]
    Bessel(BesselCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Members of D(f, g) up to dmax.
    Density {
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        dmax: Option<u64>,
    },
    /// Every stage, with artifacts written under the cache directory.
    Run,
}

#[derive(Subcommand)]
enum YoshidaCmd {
    /// Build (or load from cache) the coefficient table of the configured pair.
    Build {
        #[arg(long)]
        bound: Option<i64>,
    },
    /// Nonvanishing and U(p) checks on a table.
    Check {
        #[command(flatten)]
        table: TableArg,
    },
    /// Coefficients c(n, r) of the Fourier–Jacobi coefficient of index m.
    Fj {
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        index: i64,
    },
}

#[derive(Subcommand)]
enum BesselCmd {
    /// Exact B_χ for every fundamental d ≤ dmax.
    Scan {
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        dmax: Option<u64>,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Central values for every (d, χ) with B_χ ≠ 0.
    Ptb {
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        dmax: Option<u64>,
        #[arg(long)]
        floor: Option<f64>,
    },
}

#[derive(Args)]
struct TableArg {
    /// A .ycf table; built from the configuration when absent.
    #[arg(long)]
    table: Option<PathBuf>,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv}: expected key=value"))?;
        cfg.set(k, v)?;
    }
    if let Some(d) = &cli.cache_dir {
        cfg.cache_dir = d.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(e) = cli.emit {
        cfg.emit = e;
    }
    Ok(cfg)
}

fn table_for(cfg: &RunConfig, arg: &TableArg) -> Result<yoshida_core::siegel::SiegelCoeffTable> {
    match &arg.table {
        Some(p) => pipeline::load_table(p),
        None => {
            let pair = pipeline::select(cfg)?;
            Ok(Cache::new(&cfg.cache_dir).table(&pair.f.eigen, &pair.g.eigen, pair.m1, cfg.disc_bound)?.0)
        }
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?)
}

fn json_text(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = Cli::parse();
    let cfg = config(&cli)?;
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global().context("thread pool")?;
    let text = run(&cli, &cfg)?;
    match &cli.out {
        Some(p) => emit_file(p, text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<String> {
    let emit = cfg.emit;
    let hash = cfg.hash();
    let start = Instant::now();
    match &cli.cmd {
        Command::Classgroup { disc } => {
            let g = class_group(*disc, false)?;
            match emit {
                Emit::Json => json_text(&g.to_json()),
                Emit::Csv => {
                    let chars = characters(&g);
                    let rows = g
                        .elements
                        .iter()
                        .enumerate()
                        .map(|(i, f)| {
                            let vals: Vec<String> = chars.iter().map(|c| c.values[i].to_string()).collect();
                            vec![i.to_string(), f.a.to_string(), f.b.to_string(), f.c.to_string(), vals.join(" ")]
                        })
                        .collect();
                    csv_text(&["class", "a", "b", "c", "character_exponents"], rows)
                }
            }
        }
        Command::Brandt { ramified, level, weight, nmax } => {
            let order = eichler_order(*ramified, *level)?;
            // The decomposition also needs B(p) for p dividing the level.
            let depth = yoshida_core::arith::prime_divisors(*level).into_iter().chain([*nmax, 2]).max().unwrap_or(2);
            let bs = BrandtSystem::build(&order, *weight, depth, default_kernel(*weight).as_ref())?;
            let dec = decompose(&bs, (*nmax).max(2))?;
            let mut v = bs.to_json();
            if let Some(m) = v["matrices"].as_object_mut() {
                m.retain(|n, _| n.parse::<u64>().is_ok_and(|n| n <= *nmax));
            }
            v["eigensystems"] = serde_json::to_value(&dec.rational)?;
            v["irrational"] = serde_json::to_value(&dec.irrational)?;
            stage_log("brandt", start, &format!("classes={} dim={}", order.h(), bs.dim()));
            json_text(&v)
        }
        Command::Yoshida(YoshidaCmd::Build { bound }) => {
            let mut cfg = cfg.clone();
            if let Some(b) = bound {
                cfg.disc_bound = *b;
            }
            let pair = pipeline::select(&cfg)?;
            let (t, path, hit) = Cache::new(&cfg.cache_dir).table(&pair.f.eigen, &pair.g.eigen, pair.m1, cfg.disc_bound)?;
            stage_log("build_yoshida", start, &format!("f={} g={} keys={} cached={hit} path={}", pair.f.label, pair.g.label, t.coeffs.len(), path.display()));
            Ok(t.to_ycf())
        }
        Command::Yoshida(YoshidaCmd::Check { table }) => {
            let t = table_for(cfg, table)?;
            let mut checks = serde_json::Map::new();
            checks.insert("nonzero".into(), json!(!t.is_zero()));
            for p in yoshida_core::arith::prime_divisors(t.level) {
                let v = match u_p(&t, p) {
                    Ok(l) => json!(l.to_string()),
                    Err(e) => json!(format!("error: {e}")),
                };
                checks.insert(format!("U({p})"), v);
            }
            json_text(&json!({"config": hash, "kernel": KERNEL_VERSION, "provenance": t.provenance, "checks": checks}))
        }
        Command::Yoshida(YoshidaCmd::Fj { table, index }) => {
            let t = table_for(cfg, table)?;
            let s = fourier_jacobi(&t, *index)?;
            let rows: Vec<Vec<String>> = s.cmap.iter().filter(|(_, v)| !yoshida_core::arith::q_is_zero(v)).map(|((n, r), v)| vec![n.to_string(), r.to_string(), v.to_string()]).collect();
            match emit {
                Emit::Csv => csv_text(&["n", "r", "c"], rows),
                Emit::Json => json_text(&json!({"config": hash, "index": index, "bound": s.disc_bound, "coeffs": rows})),
            }
        }
        Command::Halfint { table, anchor, xmax } => {
            let t = table_for(cfg, table)?;
            let xmax = xmax.unwrap_or(cfg.xmax);
            let p = if anchor == "auto" { prime_anchor(&t, cfg.anchor_search)?.0 } else { anchor.parse().context("anchor must be auto or a prime")? };
            let h = extract_h(&fourier_jacobi(&t, p as i64)?, xmax)?;
            let scan = fundamental_scan(&h, &t, xmax)?;
            stage_log("halfint", start, &format!("anchor={p} hits={}", scan.hits.len()));
            let values = scan.hits.iter().map(|d| (*d, h.coeff(*d).to_string())).collect();
            pipeline::halfint_csv(cfg, &scan, &values)
        }
        Command::Lvalue { f, disc, chi, prec } => {
            let form = pipeline::form_by_label(f, cfg.qmax)?;
            let mut params = pipeline::afe_params(cfg);
            if let Some(e) = prec {
                params.tol = *e;
            }
            let g = class_group(*disc, false)?;
            let chars = characters(&g);
            let c = chars.get(*chi).with_context(|| format!("Cl(-{disc}) has {} characters", chars.len()))?;
            let engine = AfeEngine::new(params.clone());
            let need = engine.terms_needed(&rankin_shape(form.eigen.weight(), form.eigen.level(), *disc)?, Complex64::new(0.5, 0.0))?;
            let nf = pipeline::newform_coeffs(&Cache::new(&cfg.cache_dir), &form, need)?;
            let l = rankin_ldata(&nf.a, nf.weight, nf.level, &g, c, nf.a.len() - 1)?;
            let v = engine.eval(&l, Complex64::new(0.5, 0.0))?;
            let verdict = Verdict::of(&v, cfg.floor).as_str();
            let (re, im) = (v.value[0], v.value[1]);
            match emit {
                Emit::Json => json_text(&json!({"config": hash, "d": disc, "chi": chi, "value_re": re, "value_im": im, "err": v.error_bound, "verdict": verdict})),
                Emit::Csv => csv_text(
                    &["d", "chi", "value_re", "value_im", "err", "verdict"],
                    vec![vec![disc.to_string(), chi.to_string(), format!("{re:.15e}"), format!("{im:.15e}"), format!("{:.3e}", v.error_bound), verdict.into()]],
                ),
            }
        }
        Command::Bessel(BesselCmd::Scan { table, dmax }) => {
            let t = table_for(cfg, table)?;
            let dmax = dmax.unwrap_or(cfg.dmax);
            if dmax as i64 > t.disc_bound {
                bail!("dmax = {dmax} exceeds the table bound {}", t.disc_bound);
            }
            pipeline::bessel_csv(cfg, &t, dmax)
        }
        Command::Verify(VerifyCmd::Ptb { table, dmax, floor }) => {
            let t = table_for(cfg, table)?;
            let mut cfg = cfg.clone();
            if let Some(d) = dmax {
                cfg.dmax = *d;
            }
            if let Some(f) = floor {
                cfg.floor = *f;
            }
            cfg.validate()?;
            let rec = scan(&cfg, &t)?;
            pipeline::ptb_csv(&cfg, &rec)
        }
        Command::Density { table, dmax } => {
            let t = table_for(cfg, table)?;
            let mut cfg = cfg.clone();
            if let Some(d) = dmax {
                cfg.dmax = *d;
            }
            cfg.validate()?;
            let rec = scan(&cfg, &t)?;
            let pair = pipeline::select(&cfg)?;
            log::info!("{}", pipeline::density_summary(&rec).trim_end());
            pipeline::density_json(&cfg, &pair.f.label, &pair.g.label, &rec)
        }
        Command::Run => {
            let a = pipeline::run_pipeline(cfg)?;
            if a.hard_failures > 0 {
                bail!("{} hard failure(s); see {}", a.hard_failures, a.dir.join("ptb.csv").display());
            }
            let files: Vec<String> = a.files.iter().map(|p| p.display().to_string()).collect();
            json_text(&json!({"config": hash, "out": a.dir.display().to_string(), "files": files, "members": a.members, "halfint_hits": a.scan_hits}))
        }
    }
}

/// Density scan for the configured pair, with coefficients sized for dmax.
fn scan(cfg: &RunConfig, t: &yoshida_core::siegel::SiegelCoeffTable) -> Result<yoshida_core::bessel_verify::DensityRecord> {
    let pair = pipeline::select(cfg)?;
    let params = pipeline::afe_params(cfg);
    let ds = yoshida_core::bessel_verify::odd_fundamental_upto(cfg.dmax);
    let cache = Cache::new(&cfg.cache_dir);
    let fc = pipeline::newform_coeffs(&cache, &pair.f, pipeline::terms_for(pair.f.eigen.weight(), cfg.level, &ds, &params)?)?;
    let gc = pipeline::newform_coeffs(&cache, &pair.g, pipeline::terms_for(2, cfg.level, &ds, &params)?)?;
    let start = Instant::now();
    let rec = density_scan(t, &fc, &gc, cfg.dmax, cfg.floor, &params)?;
    stage_log("density_scan", start, &format!("members={} hard_failures={}", rec.members.len(), rec.hard_failures().len()));
    Ok(rec)
}
