use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn cubiclab(out: &Path, args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_cubiclab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn manifest(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap()
}

fn digests(out: &Path) -> Vec<(String, String)> {
    manifest(out)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["file"].as_str().unwrap().to_string(), o["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(cubiclab(out, &["render-julia", "--set", "julia.colour=red"]), 2);
    assert_eq!(cubiclab(out, &["hunt", "--set", "hunt.depth=0"]), 2);
    assert_eq!(cubiclab(out, &["no-such-command"]), 2);
    let cfg = out.join("bad.ini");
    std::fs::write(&cfg, "[julia\nresolution = 64\n").unwrap();
    assert_eq!(cubiclab(out, &["render-julia", "--config", cfg.to_str().unwrap()]), 2);
    std::fs::write(&cfg, "[julia]\nresolution = sixty\n").unwrap();
    assert_eq!(cubiclab(out, &["render-julia", "--config", cfg.to_str().unwrap()]), 2);
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn numeric_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let code = cubiclab(dir.path(), &["dim", "--set", "dim.a=0", "--set", "dim.b=0.1", "--set", "dim.method=pressure"]);
    assert_eq!(code, 3);
}

#[test]
fn starved_hunt_exits_4_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let code = cubiclab(
        out,
        &["hunt", "--set", "hunt.depth=2", "--set", "hunt.raster=8", "--set", "hunt.max_raster=8"],
    );
    assert_eq!(code, 4);
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("hunt_report.json")).unwrap()).unwrap();
    assert!(report["report"]["truncated"].is_string());
    assert_eq!(report["checks"]["completed"], Value::Bool(false));
}

#[test]
fn outputs_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let (one, four) = (dir.path().join("one"), dir.path().join("four"));
    let args = ["render-slice", "--set", "slice.resolution=48", "--set", "slice.prescan=48"];
    assert_eq!(cubiclab(&one, &[&args[..], &["--threads", "1"]].concat()), 0);
    assert_eq!(cubiclab(&four, &[&args[..], &["--threads", "4"]].concat()), 0);
    assert_eq!(digests(&one), digests(&four));
    assert_eq!(std::fs::read(one.join("slice.ppm")).unwrap(), std::fs::read(four.join("slice.ppm")).unwrap());
}

#[test]
fn mcmullen_golden_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let args = [
        "render-julia",
        "--set",
        "julia.family=mcmullen",
        "--set",
        "julia.degree=3",
        "--set",
        "julia.a=0.1",
        "--set",
        "julia.b=0.1",
        "--set",
        "julia.half_width=1.6",
    ];
    assert_eq!(cubiclab(out, &args), 0);
    let bytes = std::fs::read(out.join("julia.ppm")).unwrap();
    assert!(bytes.starts_with(b"P6\n256 256\n255\n"));
    assert_eq!(digests(out), vec![("julia.ppm".to_string(), GOLDEN_MCMULLEN.to_string())]);
}

const GOLDEN_MCMULLEN: &str = "fec37c69af88fef1ed45f6a88cba3080d433073b68115dc249b5b7e986b16558";

#[test]
fn unit_disk_pixel_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(cubiclab(out, &["render-julia", "--set", "julia.half_width=1.5", "--set", "julia.resolution=400"]), 0);
    let m = manifest(out);
    let bounded = m["summary"]["bounded_pixels"].as_f64().unwrap();
    let expected = std::f64::consts::PI / m["summary"]["pixel_area"].as_f64().unwrap();
    assert!((bounded - expected).abs() <= 0.01 * expected, "{bounded} vs {expected}");
}

#[test]
fn omega_table_is_symmetric_for_zero_over_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(cubiclab(out, &["omega", "--set", "omega.resolution=64"]), 0);
    let mut rows = csv::Reader::from_path(out.join("omega_disks.csv")).unwrap();
    let rows: Vec<Vec<f64>> = rows
        .records()
        .map(|r| r.unwrap().iter().map(|f| f.parse::<f64>().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 24);
    for r in &rows {
        let mirror = rows
            .iter()
            .find(|m| m[0] == -r[0] && m[1] == r[1])
            .expect("mirror disk");
        assert!((mirror[2] + r[2]).abs() <= 1e-10, "{r:?} vs {mirror:?}");
        assert!((mirror[4] - r[4]).abs() <= 1e-10);
        assert!((mirror[5] + r[6]).abs() <= 1e-10);
    }
    let img = cubiclab::cli::output::parse_ppm(&std::fs::read(out.join("omega.ppm")).unwrap()).unwrap();
    for row in 0..img.height {
        for col in 0..img.width {
            let a = img.pixels[row * img.width + col];
            let b = img.pixels[row * img.width + img.width - 1 - col];
            assert_eq!(a == [255, 255, 255], b == [255, 255, 255], "pixel {row},{col}");
        }
    }
}

#[test]
fn zoom_sequence_stays_inside_parent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let args = [
        "render-slice",
        "--set",
        "slice.resolution=128",
        "--set",
        "slice.zooms=2",
        "--set",
        "slice.zoom_center=-1.2146,0.00159",
    ];
    assert_eq!(cubiclab(out, &args), 0);
    let images = manifest(out)["summary"]["images"].as_array().unwrap().clone();
    assert_eq!(images.len(), 3);
    for (k, img) in images.iter().enumerate().skip(1) {
        assert!(out.join(format!("slice_zoom{k}.ppm")).exists());
        let check = &img["zoom_check"];
        assert!(check["checked"].as_u64().unwrap() > 0, "{check}");
        assert_eq!(check["violations"].as_u64(), Some(0), "{check}");
    }
}

#[test]
fn solve_slice_reports_a_member() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(cubiclab(out, &["solve-slice"]), 0);
    let v: Value = serde_json::from_slice(&std::fs::read(out.join("solve.json")).unwrap()).unwrap();
    assert!(v["residual"].as_f64().unwrap() <= 1e-8, "{v}");
}
