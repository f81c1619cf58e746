use std::process::{Command, Output};

fn levelcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelcurv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CIRCLE: [&str; 10] = ["--function", "x^2 + y^2", "--radius", "3", "--cell", "0.02", "--t-min", "0.5", "--t-max", "2"];

#[test]
fn profile_prints_the_csv_schema() {
    let o = levelcurv(&[&["profile"][..], &CIRCLE, &["--n-t", "4"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,R,K,absK,K_l0,K_l1,absK_l0,absK_l1,L_1,absL_1,n_components,boundary_fraction,degenerate_mass"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    let abs_k: f64 = rows[0].split(',').nth(3).unwrap().parse().unwrap();
    assert!((abs_k - 2.0 * std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn runs_are_deterministic() {
    let args = [&["profile"][..], &CIRCLE, &["--n-t", "3"]].concat();
    assert_eq!(levelcurv(&args).stdout, levelcurv(&args).stdout);
}

#[test]
fn exit_codes() {
    // Usage: bad expression, missing flag, unknown flag.
    assert_eq!(levelcurv(&["profile", "--function", "x^", "--t-min", "0", "--t-max", "1"]).status.code(), Some(1));
    assert_eq!(levelcurv(&["profile", "--function", "x^2+y^2"]).status.code(), Some(1));
    assert_eq!(levelcurv(&["profile", "--bogus"]).status.code(), Some(1));
    assert_eq!(levelcurv(&["--help"]).status.code(), Some(0));
    // Numeric: every level fails.
    let o = levelcurv(&["profile", "--function", "sqrt(x) + y", "--cell", "0.05", "--t-min", "0", "--t-max", "1", "--n-t", "2", "--radius", "0.3"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    // I/O: output directory under a regular file.
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("file");
    std::fs::write(&file, "x").unwrap();
    let out = file.join("sub");
    let o = levelcurv(&[&["profile"][..], &CIRCLE, &["--n-t", "2", "--out", out.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("file"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.conf");
    std::fs::write(&cfg, "# circle\nfunction = \"x^2 + y^2\"\nradius = 3\ncell = 0.02\nt_min = 0.5\nt-max = 2\nn_t = 7\n").unwrap();
    let o = levelcurv(&["profile", "--config", cfg.to_str().unwrap(), "--n-t", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 4);
    let o = levelcurv(&["profile", "--config", cfg.to_str().unwrap()]);
    assert_eq!(stdout(&o).lines().count(), 8);
    std::fs::write(&cfg, "not a pair\n").unwrap();
    assert_eq!(levelcurv(&["profile", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn profile_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let args = [&["profile"][..], &CIRCLE, &["--n-t", "3", "--plot", "--export-mesh", "1", "--out", out.to_str().unwrap()]].concat();
    let o = levelcurv(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["profile.csv", "profile.json", "profile.svg", "mesh_t1.obj"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn jumps_reports_the_paraboloid_minimum() {
    let o = levelcurv(&[
        "jumps", "--function", "x^2 + y^2", "--radius", "2", "--cell", "0.01", "--t-min", "-0.5", "--t-max", "1.5", "--n-t", "9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let jumps: Vec<&str> = text.lines().filter(|l| l.starts_with("jump ")).collect();
    assert_eq!(jumps.len(), 1, "{text}");
    assert!(jumps[0].contains("kind=critical-value"));
}

#[test]
fn oracle_json_keys() {
    let o = levelcurv(&["oracle", "--function", "x^2 + y^2 + z^2", "--arity", "3", "--radius", "2", "--cell", "0.05", "--t", "1", "--samples", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["K_est", "absK_est", "stderr", "stderr_signed", "n_used", "n_rejected", "t", "R", "h", "mesh"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!((v["absK_est"].as_f64().unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    let seeded = ["oracle", "--function", "x^2 + y^2", "--t", "1", "--cell", "0.02", "--samples", "30", "--seed", "9"];
    assert_eq!(levelcurv(&seeded).stdout, levelcurv(&seeded).stdout);
}

#[test]
fn gauss_image_and_escape() {
    let dir = tempfile::tempdir().unwrap();
    let o = levelcurv(&[
        "gauss-image", "--function", "x^2 + y^2", "--t", "1", "--cell", "0.02", "--cells", "360", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let json_end = text.rfind('}').unwrap();
    let v: serde_json::Value = serde_json::from_str(&text[..=json_end]).unwrap();
    assert_eq!(v["cells"], 360);
    assert!(dir.path().join("gauss_image.csv").exists());

    let o = levelcurv(&["escape", "--function", "x^2 + y^2", "--c", "1", "--direction", "0.6,0.8", "--radius", "3", "--cell", "0.02"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["one_sided_escape"], false);
    assert_eq!(levelcurv(&["escape", "--function", "x^2 + y^2", "--c", "1", "--direction", "1,2,3"]).status.code(), Some(1));
}
