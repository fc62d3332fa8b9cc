//! Run configuration: flat `key=value` text, overridable from the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub level: u64,
    /// Weight 2k of f; g always has weight 2.
    pub weight: u32,
    /// Index of f among the rational newforms of its weight and level; None picks the first
    /// one whose Atkin–Lehner signs match some g.
    pub f: Option<usize>,
    pub g: Option<usize>,
    pub m1: Option<u64>,
    pub qmax: u64,
    pub disc_bound: i64,
    pub anchor: Option<u64>,
    pub anchor_search: i64,
    pub xmax: i64,
    pub dmax: u64,
    pub tol: f64,
    pub floor: f64,
    pub smoother: String,
    pub cache_dir: PathBuf,
    pub emit: Emit,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            level: 19,
            weight: 6,
            f: None,
            g: None,
            m1: None,
            qmax: 13,
            disc_bound: 400,
            anchor: None,
            anchor_search: 50,
            xmax: 400,
            dmax: 200,
            tol: 1e-9,
            floor: 1e-6,
            smoother: "exponential".into(),
            cache_dir: PathBuf::from(".ylift-cache"),
            emit: Emit::Json,
            threads: 0,
        }
    }
}

fn auto<T: std::str::FromStr>(v: &str) -> Result<Option<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    if v == "auto" {
        Ok(None)
    } else {
        Ok(Some(v.parse()?))
    }
}

fn show<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), |x| x.to_string())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let ctx = || format!("bad value for {key}: {v}");
        match key.trim() {
            "level" => self.level = v.parse().with_context(ctx)?,
            "weight" => self.weight = v.parse().with_context(ctx)?,
            "f" => self.f = auto(v).with_context(ctx)?,
            "g" => self.g = auto(v).with_context(ctx)?,
            "m1" => self.m1 = auto(v).with_context(ctx)?,
            "qmax" => self.qmax = v.parse().with_context(ctx)?,
            "disc_bound" => self.disc_bound = v.parse().with_context(ctx)?,
            "anchor" => self.anchor = auto(v).with_context(ctx)?,
            "anchor_search" => self.anchor_search = v.parse().with_context(ctx)?,
            "xmax" => self.xmax = v.parse().with_context(ctx)?,
            "dmax" => self.dmax = v.parse().with_context(ctx)?,
            "tol" | "precision" => self.tol = v.parse().with_context(ctx)?,
            "floor" => self.floor = v.parse().with_context(ctx)?,
            "smoother" => self.smoother = v.to_string(),
            "cache_dir" => self.cache_dir = PathBuf::from(v),
            "emit" => {
                self.emit = match v {
                    "json" => Emit::Json,
                    "csv" => Emit::Csv,
                    _ => bail!("emit must be json or csv, got {v}"),
                }
            }
            "threads" => self.threads = v.parse().with_context(ctx)?,
            other => bail!("unknown configuration key {other}"),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and lines starting with '#' are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').with_context(|| format!("line {}: expected key=value", i + 1))?;
            self.set(k, v).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        c.apply_text(&text)?;
        Ok(c)
    }

    /// The keys that determine results, one `key=value` per line in a fixed order. Paths,
    /// output format and thread count are left out: they never change an artifact.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("level", self.level.to_string());
        put("weight", self.weight.to_string());
        put("f", show(&self.f));
        put("g", show(&self.g));
        put("m1", show(&self.m1));
        put("qmax", self.qmax.to_string());
        put("disc_bound", self.disc_bound.to_string());
        put("anchor", show(&self.anchor));
        put("anchor_search", self.anchor_search.to_string());
        put("xmax", self.xmax.to_string());
        put("dmax", self.dmax.to_string());
        put("tol", format!("{:e}", self.tol));
        put("floor", format!("{:e}", self.floor));
        put("smoother", self.smoother.clone());
        s
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// Consistency checks made before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.level < 2 {
            bail!("level must be at least 2");
        }
        if self.weight < 2 || self.weight % 2 != 0 {
            bail!("weight of f must be even and at least 2, got {}", self.weight);
        }
        if self.disc_bound < 3 {
            bail!("disc_bound must be at least 3");
        }
        if self.dmax as i64 > self.disc_bound {
            bail!("dmax = {} exceeds disc_bound = {}: S(-d) would fall outside the table", self.dmax, self.disc_bound);
        }
        if self.xmax > self.disc_bound {
            bail!("xmax = {} exceeds disc_bound = {}: c(m) needs |disc T| = m", self.xmax, self.disc_bound);
        }
        if !(self.tol > 0.0) || !(self.floor >= 0.0) {
            bail!("tol must be positive and floor nonnegative");
        }
        yoshida_core::lfunc::smoother_by_name(&self.smoother)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# flagship\nlevel = 19\nf=auto\nm1=19\n\ndmax=100\n").unwrap();
        assert_eq!(c.m1, Some(19));
        assert_eq!(c.f, None);
        assert_eq!(c.dmax, 100);
        c.set("emit", "csv").unwrap();
        assert_eq!(c.emit, Emit::Csv);
        assert!(c.set("nonsense", "1").is_err());
        assert!(c.apply_text("level").is_err());
    }

    #[test]
    fn hash_ignores_paths_and_threads() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.threads = 8;
        b.cache_dir = PathBuf::from("/elsewhere");
        b.emit = Emit::Csv;
        assert_eq!(a.hash(), b.hash());
        b.dmax = 150;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_depth_mismatch() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.dmax = 500;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.xmax = 401;
        assert!(c.validate().is_err());
    }
}
