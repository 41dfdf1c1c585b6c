use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workdir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("beltrami-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn config(dir: &Path, body: serde_json::Value) -> PathBuf {
    let p = dir.join("run.json");
    fs::write(&p, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    p
}

fn beltrami(args: &[&str], cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beltrami")).args(args).arg("--config").arg(cfg).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_reports_fmo_but_not_limsup() {
    let dir = workdir("check");
    let out = dir.join("out");
    let cfg = config(
        &dir,
        serde_json::json!({
            "domain": {"id": "disk"},
            "mu": {"id": "boundary-log", "params": [1, 0]},
            "points": 4,
            "out": out,
        }),
    );
    let o = beltrami(&["check", "--criterion", "fmo"], &cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = beltrami(&["check", "--criterion", "limsup", "--quiet"], &cfg);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let report = json(&out.join("criteria.json"));
    assert_eq!(report["verdicts"]["limsup"], "fail");
    let o = beltrami(&["check", "--criterion", "fmo", "--quiet"], &cfg);
    assert!(o.status.success());
    let report = json(&out.join("criteria.json"));
    assert_eq!(report["verdicts"]["fmo"], "pass");
    assert_eq!(json(&out.join("manifest.json"))["status"], "ok");
}

#[test]
fn solve_on_the_disk_writes_the_harmonic_solution() {
    let dir = workdir("solve");
    let out = dir.join("out");
    let cfg = config(
        &dir,
        serde_json::json!({
            "domain": {"id": "disk"},
            "mu": {"id": "zero"},
            "phi": {"id": "fourier", "params": [0, 1, 0]},
            "grid": 64,
            "out": out,
        }),
    );
    let o = beltrami(&["solve"], &cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,Re,Im"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[2] - v[0]).abs() < 1e-6, "{line}");
        rows += 1;
    }
    assert!(rows > 100);
    assert_eq!(json(&out.join("boundary.json"))["pass"], true);
}

#[test]
fn bad_grid_size_is_rejected() {
    let dir = workdir("grid");
    let out = dir.join("out");
    let cfg = config(&dir, serde_json::json!({"domain": {"id": "disk"}, "mu": {"id": "zero"}, "grid": 300, "out": out}));
    let o = beltrami(&["solve-qc"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    let err = json(&out.join("error.json"));
    assert!(err["message"].as_str().unwrap().contains("power of two"), "{err}");
    let stderr: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(stderr, err);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = workdir("repeat");
    let mut outputs = vec![];
    for run in ["a", "b"] {
        let out = dir.join(run);
        let cfg = config(
            &dir,
            serde_json::json!({
                "domain": {"id": "disk"},
                "mu": {"id": "constant", "params": [0.3]},
                "phi": {"id": "fourier", "params": [0, 1, 0]},
                "grid": 128,
                "prime_ends": 8,
                "seed": 7,
                "out": out,
            }),
        );
        let o = beltrami(&["solve"], &cfg);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap())
            .filter(|e| e.file_name() != "manifest.json")
            .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}
