use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use casimir_core::lifshitz::ideal_force_sphere_plane;

fn casimir(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir"))
        .current_dir(dir)
        .env_remove("CASIMIR_DATA_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn ideal_force_curve_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "[materials]\nsphere = \"ideal\"\nplate = \"ideal\"\n[grid]\nvalues = [2e-7, 5e-7, 1e-6]\n",
    )
    .unwrap();
    let o = casimir(dir.path(), &["force", "--config", "run.toml", "--out", "f.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let r = rows(&text);
    assert_eq!(r.len(), 3);
    for row in r {
        let exact = ideal_force_sphere_plane(row[0], 294.3e-6).unwrap();
        assert!((row[1] / exact - 1.0).abs() < 1e-6);
    }
    // identical reruns, any thread count
    let o = casimir(dir.path(), &["force", "--config", "run.toml", "--out", "g.csv", "--threads", "1"]);
    assert!(o.status.success());
    assert_eq!(fs::read(dir.path().join("f.csv")).unwrap(), fs::read(dir.path().join("g.csv")).unwrap());
}

#[test]
fn empty_grid_and_unknown_material_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = casimir(dir.path(), &["pressure"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid is empty"));
    fs::write(dir.path().join("bad.toml"), "[materials]\nsphere = \"gold\"\n[grid]\nvalues = [1e-6]\n").unwrap();
    let o = casimir(dir.path(), &["force", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("au, cu, ideal"), "{}", stderr(&o));
    fs::write(dir.path().join("typo.toml"), "tolerance = 1e-6\n").unwrap();
    let o = casimir(dir.path(), &["force", "--config", "typo.toml"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("typo.toml:1"));
}

#[test]
fn roughness_column_and_gradient_flag() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "tol = 1e-7\n[materials]\nsphere = \"ideal\"\nplate = \"ideal\"\n[grid]\nvalues = [1e-6]\n\
         [roughness]\nentries = [[-39.4e-9, 0.5], [39.4e-9, 0.5]]\n",
    )
    .unwrap();
    let o = casimir(dir.path(), &["force", "--config", "run.toml"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("z_m,force_n,est_rel_error,force_rough_n,est_rel_error_rough\n"));
    let r = &rows(&text)[0];
    assert!((r[3] / r[1] - 1.0 - 0.00933).abs() < 5e-5, "{}", r[3] / r[1]);
    let o = casimir(dir.path(), &["force", "--gradient", "--config", "run.toml"]);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("z_m,gradient_n_per_m"));
}

#[test]
fn calibration_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = casimir(dir.path(), &["calibrate", "--bundled", "--out", "fit.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert!((report["k_n_per_f"].as_f64().unwrap() / 50280.0 - 1.0).abs() < 1e-3);

    let o = casimir(dir.path(), &["calibrate", "--data", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csv"));

    let mut single = String::from("z_metal_m,v_applied_v,delta_c_f\n");
    for i in 0..8 {
        single.push_str(&format!("{:e},0.9,1e-15\n", 3e-6 + 0.5e-6 * i as f64));
    }
    fs::write(dir.path().join("single.csv"), single).unwrap();
    let o = casimir(dir.path(), &["calibrate", "--data", "single.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = casimir(dir.path(), &["calibration-data", "--seed", "5", "--noise", "0", "--out", "clean.csv"]);
    assert!(o.status.success());
    let o = casimir(dir.path(), &["calibrate", "--data", "clean.csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let k: f64 = text.lines().find(|l| l.starts_with("k_n_per_f")).unwrap().split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((k / 50280.0 - 1.0).abs() < 1e-6);
}

#[test]
fn sweep_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sweep.toml"),
        "[grid]\nstart = 2e-7\nstop = 1.2e-6\npoints = 6\n[geometry]\ndelta0_m = 39.4e-9\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("quiet.toml"),
        "[grid]\nstart = 2e-7\nstop = 1.2e-6\npoints = 6\n[noise]\nfreq_noise_hz_per_rthz = 0.0\nseparation_noise_m = 0.0\n",
    )
    .unwrap();
    let o = casimir(dir.path(), &["sweep", "--config", "sweep.toml", "--seed", "1", "--out", "s1.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = casimir(
        dir.path(),
        &["sweep", "--config", "sweep.toml", "--seed", "1", "--threads", "1", "--out", "again.csv"],
    );
    assert!(o.status.success());
    assert_eq!(fs::read(dir.path().join("s1.csv")).unwrap(), fs::read(dir.path().join("again.csv")).unwrap());
    assert!(fs::read_to_string(dir.path().join("s1.csv")).unwrap().starts_with("z_m,f_hz,sigma_hz\n"));

    let o = casimir(dir.path(), &["sweep", "--config", "quiet.toml", "--out", "q.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let inv = rows(&fs::read_to_string(dir.path().join("q_inverted.csv")).unwrap());
    for r in inv {
        assert!((r[1] / r[3] - 1.0).abs() < 1e-12, "{r:?}");
        assert_eq!(r[2], 0.0);
    }
}

#[test]
fn limits_scale_with_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = |b: f64| {
        format!("[lambda]\nvalues = [5e-8, 2e-7, 1e-6]\n[grid]\nvalues = [2e-7, 4e-7, 8e-7]\n[bound]\nconstant_n = {b:e}\n")
    };
    fs::write(dir.path().join("a.toml"), cfg(1e-12)).unwrap();
    fs::write(dir.path().join("b.toml"), cfg(0.5e-12)).unwrap();
    let a = casimir(dir.path(), &["limits", "--config", "a.toml"]);
    let b = casimir(dir.path(), &["limits", "--config", "b.toml"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let (ra, rb) = (rows(&String::from_utf8(a.stdout).unwrap()), rows(&String::from_utf8(b.stdout).unwrap()));
    assert_eq!(ra.len(), 3);
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(y[1], 0.5 * x[1]);
    }
    fs::write(dir.path().join("c.toml"), "[lambda]\nvalues = [2e-7]\n[bound]\nconstant_n = 1e-12\n").unwrap();
    assert_eq!(casimir(dir.path(), &["limits", "--config", "c.toml"]).status.code(), Some(2));
}

#[test]
fn materials_validate_uses_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("au.csv"), "energy_ev,eps2\n0.2,2000\n1,60\n3,5\n10,1\n").unwrap();
    fs::write(
        dir.path().join("materials.toml"),
        "[materials.au-tab]\nmodel = \"tabulated\"\nplasma_ev = 9.0\nrelaxation_ev = 0.035\ndata = \"au.csv\"\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_casimir"))
        .env("CASIMIR_DATA_DIR", dir.path())
        .args(["materials", "validate"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("ok     au-tab Tabulated"), "{text}");
    assert!(text.contains("ok     ideal"));

    fs::write(dir.path().join("au.csv"), "energy_ev,eps2\n0.2,2000\n0.2,60\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_casimir"))
        .env("CASIMIR_DATA_DIR", dir.path())
        .args(["materials", "validate"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stdout).unwrap().contains("error  au-tab"));
}
