use std::path::Path;
use std::process::{Command, Output};

fn ylift(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ylift"))
        .arg("--cache-dir")
        .arg(cache)
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("ylift runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn classgroup_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&ylift(dir.path(), &["classgroup", "--disc", "23"]));
    assert_eq!(v["h"], 3);
    assert_eq!(v["forms"][0], serde_json::json!([1, 1, 6]));
    let csv = stdout(&ylift(dir.path(), &["--emit", "csv", "classgroup", "--disc", "56"]));
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(csv.starts_with("class,a,b,c,character_exponents"));
}

#[test]
fn brandt_level_eleven() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&ylift(dir.path(), &["brandt", "--ramified", "11", "--level", "11", "--nmax", "3"]));
    assert_eq!(v["classes"], 2);
    let matrices = v["matrices"].as_object().unwrap();
    assert!(matrices.contains_key("3") && !matrices.contains_key("11"));
    let cusp = v["eigensystems"].as_array().unwrap().iter().find(|e| e["cuspidal"] == true).unwrap();
    assert_eq!(cusp["hecke"]["2"], "-2");
    assert_eq!(cusp["al_signs"]["11"], -1);
}

#[test]
fn configuration_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = ylift(dir.path(), &["--set", "colour=blue", "classgroup", "--disc", "23"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown configuration key colour"));
    let o = ylift(dir.path(), &["--set", "dmax=500", "classgroup", "--disc", "23"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds disc_bound"));
    let o = ylift(dir.path(), &["classgroup", "--disc", "12"]);
    assert!(!o.status.success());
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# small run\ndisc_bound = 100\ndmax = 60\nxmax = 100\n").unwrap();
    let o = ylift(dir.path(), &["--config", cfg.to_str().unwrap(), "--set", "dmax=120", "classgroup", "--disc", "7"]);
    assert!(!o.status.success(), "dmax=120 must clash with disc_bound=100 from the file");
}

#[test]
fn table_build_cache_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.ycf");
    let o = ylift(dir.path(), &["--set", "disc_bound=120", "--set", "dmax=100", "--set", "xmax=120", "--out", out.to_str().unwrap(), "yoshida", "build"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("YCF1 weight=4 level=19 bound=120 "));
    let again = ylift(dir.path(), &["--set", "disc_bound=120", "--set", "dmax=100", "--set", "xmax=120", "yoshida", "build"]);
    assert!(String::from_utf8_lossy(&again.stderr).contains("cached=true"));
    assert_eq!(stdout(&again), text);

    let t = out.to_str().unwrap();
    let v = json(&ylift(dir.path(), &["--set", "disc_bound=120", "--set", "dmax=100", "--set", "xmax=120", "yoshida", "check", "--table", t]));
    assert_eq!(v["checks"]["nonzero"], true);
    let fj = stdout(&ylift(dir.path(), &["--set", "disc_bound=120", "--set", "dmax=100", "--set", "xmax=120", "--emit", "csv", "yoshida", "fj", "--table", t, "--index", "2"]));
    assert!(fj.lines().count() > 1);

    let h = stdout(&ylift(dir.path(), &["--set", "disc_bound=120", "--set", "xmax=120", "--set", "dmax=100", "halfint", "--table", t]));
    assert!(h.starts_with("# config="));
    assert!(h.lines().count() > 3);

    let b = stdout(&ylift(dir.path(), &["--set", "disc_bound=120", "--set", "xmax=120", "--set", "dmax=100", "bessel", "scan", "--table", t]));
    assert!(b.lines().any(|l| l.starts_with("23,")));
}

#[test]
fn central_value_of_a_small_pair() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&ylift(dir.path(), &["lvalue", "--f", "2.11.0", "--disc", "23", "--chi", "1", "--prec", "1e-10"]));
    assert_eq!(v["verdict"], "NONZERO");
    assert!(v["err"].as_f64().unwrap() < 1e-10);
    // a second call reuses the cached expansion and agrees to the last bit
    let w = json(&ylift(dir.path(), &["lvalue", "--f", "2.11.0", "--disc", "23", "--chi", "1", "--prec", "1e-10"]));
    assert_eq!(v, w);
    // root number −1 forces L(1/2) = 0 here, which must not be called nonzero
    let z = json(&ylift(dir.path(), &["lvalue", "--f", "2.11.0", "--disc", "7", "--chi", "0", "--prec", "1e-10"]));
    assert_eq!(z["verdict"], "INCONCLUSIVE");
    assert!(z["value_re"].as_f64().unwrap().abs() <= z["err"].as_f64().unwrap());
    let o = ylift(dir.path(), &["lvalue", "--f", "2.11.0", "--disc", "11", "--chi", "0"]);
    assert!(!o.status.success(), "d = 11 shares a prime with the level");
}

#[test]
fn ptb_verification_at_small_depth() {
    let dir = tempfile::tempdir().unwrap();
    let csv = stdout(&ylift(dir.path(), &["--set", "disc_bound=120", "--set", "xmax=120", "--set", "dmax=23", "verify", "ptb"]));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "d,chi_index,B_nonzero,Lf_value,Lg_value,verdict,Lf_err,Lg_err");
    assert!(rows.len() > 1);
    assert!(rows[1..].iter().all(|r| r.contains(",NONZERO,")));
}
