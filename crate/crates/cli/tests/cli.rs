use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("esdg-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn esdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esdg")).args(args).output().expect("run esdg")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn constants_table() {
    let dir = scratch("constants");
    let o = esdg(&["constants", "--N", "1..3", "--out_dir", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("constants.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("N,quad_CI_gll"));
    assert!(lines[1].starts_with("1,2.000000,6.000000,2.000000,6.000000,2.000000,9.000000,6.000000,12.000000"));
    assert!(lines[3].starts_with("3,37.155"));
}

#[test]
fn check_operators_passes() {
    let dir = scratch("operators");
    let o = esdg(&["check-operators", "--N", "1..3", "--out_dir", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("operators.csv")).unwrap();
    // 2 kinds x 3 degrees x 3 options plus the header
    assert_eq!(csv.lines().count(), 19);
}

#[test]
fn malformed_config_reports_line() {
    let dir = scratch("badconfig");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "N = 2\nflux = upwind\n").unwrap();
    let o = esdg(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("run.cfg:2:"), "{}", stderr(&o));

    fs::write(&cfg, "N = 2\nnonsense\n").unwrap();
    let o = esdg(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(":2:"));

    let o = esdg(&["simulate", "--cfl", "-1"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = esdg(&["simulate", "--config", dir.join("missing.cfg").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

fn small_run(dir: &PathBuf) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "[discretization]\nN = 2\noption = 3\n[mesh]\nelement_kind = hybrid\nnx = 4\nny = 4\n\
             domain = 0,10,-5,5\n[time]\nT = 0.2\ncfl = 0.5\nflux = es\nout_dir = {}\n",
            dir.display()
        ),
    )
    .unwrap();
    esdg(&["simulate", "--config", cfg.to_str().unwrap()])
}

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (scratch("sim-a"), scratch("sim-b"));
    for d in [&a, &b] {
        let o = small_run(d);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["history.csv", "solution.csv"] {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between identical runs");
    }
    let history = fs::read_to_string(a.join("history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("time,entropy_rhs,total_mass,dt"));
    let last = history.lines().last().unwrap();
    assert!(last.starts_with("2.0000000000000001e-1"), "{last}");
    // dissipation only removes entropy
    for row in history.lines().skip(1) {
        let ent: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(ent <= 1e-12, "{row}");
    }
}

#[test]
fn blow_up_exits_with_physics_code() {
    let dir = scratch("blowup");
    let o = esdg(&[
        "simulate", "--initial", "density-jump", "--N", "2", "--nx", "4", "--ny", "2", "--cfl", "50", "--T", "5",
        "--flux", "ec", "--out_dir", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("nonphysical"));
}

#[test]
fn entropy_sweep_writes_grid() {
    let dir = scratch("entropy");
    let o = esdg(&[
        "entropy-test", "--N", "2", "--nx", "6", "--ny", "1", "--T", "0.05", "--sweep", "Ngeo=1,2,M=1,3",
        "--element_kind", "tri", "--out_dir", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("entropy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for row in csv.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        let v: f64 = cols[5].parse().unwrap();
        assert!(v < 1e-10, "{row}");
    }
    let o = esdg(&["entropy-test", "--sweep", "Q=1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn convergence_table() {
    let dir = scratch("convergence");
    let o = esdg(&[
        "convergence", "--N", "1", "--options", "1,3", "--levels", "2", "--nx", "2", "--T", "0.1", "--out_dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = fs::read_to_string(dir.join("convergence.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
    let rates = fs::read_to_string(dir.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 3);
    let o = esdg(&["convergence", "--options", "9"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mesh_dump_lists_elements() {
    let dir = scratch("mesh");
    let o = esdg(&[
        "mesh-dump", "--element_kind", "hybrid", "--nx", "2", "--ny", "2", "--Ngeo", "2", "--alpha", "0.1",
        "--out_dir", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.join("mesh.txt")).unwrap();
    assert!(text.contains("elements 6"));
    assert!(text.contains("mapping degree 2"));
}
