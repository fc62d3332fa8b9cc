//! On-disk cache. Every entry is written through a temporary file and a rename, so an
//! interrupted run never leaves a partial entry behind.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use yoshida_core::quaternion::eigen::EigenSystem;
use yoshida_core::quaternion::order::EichlerOrderData;
use yoshida_core::quaternion::qexp;
use yoshida_core::siegel::{build_yoshida, write_atomic, SiegelCoeffTable, KERNEL_VERSION};

pub struct Cache {
    pub dir: PathBuf,
}

fn short_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
}

/// A stable fingerprint of an eigensystem: weight, level and Hecke eigenvalues.
pub fn form_key(e: &EigenSystem) -> String {
    let hecke: Vec<String> = e.hecke.iter().map(|(p, a)| format!("{p}:{a}")).collect();
    short_hash(&format!("{}|{}|{}", e.weight(), e.level(), hecke.join(",")))
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn path(&self, sub: &str) -> PathBuf {
        self.dir.join(sub)
    }

    /// The table of the lift of (f, g), built on a miss.
    pub fn table(&self, f: &EigenSystem, g: &EigenSystem, m1: u64, bound: i64) -> Result<(SiegelCoeffTable, PathBuf, bool)> {
        let key = short_hash(&format!("{KERNEL_VERSION}|{}|{}|{m1}|{bound}", form_key(f), form_key(g)));
        let path = self.path(&format!("tables/{key}.ycf"));
        if path.exists() {
            let t = SiegelCoeffTable::read_ycf(&path).with_context(|| format!("reading cached table {}", path.display()))?;
            if t.disc_bound == bound {
                return Ok((t, path, true));
            }
        }
        let t = build_yoshida(f, g, m1, bound)?;
        t.write_ycf(&path)?;
        Ok((t, path, false))
    }

    /// a(0..=nmax) of the newform `e` realised on `order`. A cached expansion at least as
    /// long is reused and truncated.
    pub fn qexp(&self, label: &str, order: &EichlerOrderData, e: &EigenSystem, nmax: usize) -> Result<(Vec<i128>, bool)> {
        let path = self.path(&format!("qexp/{}-{}.txt", label.replace('.', "_"), form_key(e)));
        if let Ok(text) = std::fs::read_to_string(&path) {
            let a = parse_qexp(&text).with_context(|| format!("reading {}", path.display()))?;
            if a.len() > nmax {
                return Ok((a[..=nmax].to_vec(), true));
            }
        }
        let a = qexp::coefficients(order, e, nmax as u64)?;
        write_atomic(&path, render_qexp(label, &a).as_bytes())?;
        Ok((a, false))
    }
}

fn render_qexp(label: &str, a: &[i128]) -> String {
    let mut s = format!("QEXP1 label={label} nmax={}\n", a.len() - 1);
    for x in &a[1..] {
        s.push_str(&x.to_string());
        s.push('\n');
    }
    s
}

fn parse_qexp(text: &str) -> Result<Vec<i128>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("QEXP1 ") {
        bail!("bad header {header}");
    }
    let nmax: usize = header
        .split_whitespace()
        .find_map(|f| f.strip_prefix("nmax="))
        .context("header lacks nmax")?
        .parse()?;
    let mut a = vec![0i128];
    for l in lines {
        a.push(l.trim().parse()?);
    }
    if a.len() != nmax + 1 {
        bail!("expected {nmax} coefficients, found {}", a.len() - 1);
    }
    Ok(a)
}

/// Writes `bytes` atomically, creating parent directories.
pub fn emit_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qexp_round_trip() {
        let a = vec![0, 1, -2, -1, 2, 1];
        let text = render_qexp("2.11.0", &a);
        assert_eq!(parse_qexp(&text).unwrap(), a);
        assert!(parse_qexp("QEXP1 label=x nmax=3\n1\n2\n").is_err());
        assert!(parse_qexp("junk").is_err());
    }
}
