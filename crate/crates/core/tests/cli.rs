use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heis-triod"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("heis-triod-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn steiner_run_exits_with_steady_state() {
    let out = scratch("steiner");
    let r = bin()
        .args(["run", "--experiment", "1", "--T", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let total: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((total - 6.0).abs() < 1e-12);
    }
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn overrides_and_output_root() {
    let root = scratch("root");
    let r = bin()
        .env("HEIS_TRIOD_OUT", &root)
        .args([
            "run",
            "--experiment",
            "2",
            "--J",
            "20",
            "--dt",
            "1e-3",
            "--T",
            "0.01",
            "--svg",
        ])
        .args(["--snapshots", "0,0.005"])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let dir = root.join("experiment-02");
    for f in [
        "config.json",
        "energy.csv",
        "snapshots.csv",
        "triod.svg",
        "triod_final.svg",
        "energy.svg",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let cfg = heis_triod::runner::load_config(&dir.join("config.json")).unwrap();
    assert_eq!((cfg.segments, cfg.dt.as_str(), cfg.t_end), (20, "1e-3", 0.01));
    let snaps = std::fs::read_to_string(dir.join("snapshots.csv")).unwrap();
    // Two snapshots of three curves with 21 nodes each.
    assert_eq!(snaps.lines().count(), 1 + 2 * 3 * 21);

    // The written config runs again.
    let r = bin()
        .args(["run", "--config"])
        .arg(dir.join("config.json"))
        .arg("--out")
        .arg(root.join("again"))
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0));
    let _ = std::fs::remove_dir_all(&root);
}

#[test]
fn bad_input_is_a_usage_error() {
    let r = bin().args(["run", "--experiment", "16"]).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    let r = bin().args(["run", "--experiment", "2", "--dt=-1"]).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("dt"));

    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"schema": 1, "name": 3}"#).unwrap();
    let r = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("`name`"));
    let _ = std::fs::remove_file(&path);
}

#[test]
fn geodesic_prints_a_horizontal_curve() {
    let r = bin()
        .args(["geodesic", "--from", "0,0,0", "--to", "1,0,-0.1", "--samples", "8"])
        .output()
        .unwrap();
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    let last = rows.last().unwrap();
    assert!((last[1] - 1.0).abs() < 1e-12 && (last[3] + 0.1).abs() < 1e-12);
}

#[test]
fn lift_anchors_either_end() {
    let path = scratch("curve.csv");
    std::fs::write(&path, "x,y\n0,0\n1,0\n1,1\n").unwrap();
    let run = |anchor: &str| {
        let r = bin()
            .args(["lift", "--in"])
            .arg(&path)
            .args(["--anchor", anchor])
            .output()
            .unwrap();
        assert!(r.status.success());
        String::from_utf8(r.stdout).unwrap()
    };
    let start = run("start:0");
    assert!(start.lines().last().unwrap().ends_with(",0.5"));
    let end = run("end:0.5");
    assert_eq!(start, end);
    let r = bin()
        .args(["lift", "--in"])
        .arg(&path)
        .args(["--anchor", "middle:1"])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
    let _ = std::fs::remove_file(&path);
}
