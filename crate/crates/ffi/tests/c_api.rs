use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cubiclab_ffi::*;

fn z(re: f64, im: f64) -> CubiclabComplex {
    CubiclabComplex { re, im }
}

#[test]
fn family_round_trip() {
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(cubiclab_family_new(CubiclabFamilyKind::Cubic, 3, z(0.0, 0.0), z(0.0, 0.0), &mut f), CubiclabStatus::Ok);
        let mut w = CubiclabComplex::default();
        assert_eq!(cubiclab_family_eval(f, z(2.0, 0.0), &mut w), CubiclabStatus::Ok);
        assert_eq!(w, z(8.0, 0.0));
        let mut h = CubiclabPotential::default();
        assert_eq!(cubiclab_potential(f, z(2f64.exp(), 0.0), 1e-13, 2000, &mut h), CubiclabStatus::Ok);
        assert!((h.value - 2.0).abs() <= 1e-10 && h.escaped);
        let mut phi = CubiclabComplex::default();
        let mut residual = f64::NAN;
        assert_eq!(cubiclab_boettcher(f, z(5.0, 0.0), 1e-13, &mut phi, &mut residual), CubiclabStatus::Ok);
        assert!((phi.re - 5.0).abs() <= 1e-12 && residual <= 1e-12);
        let mut zeta = CubiclabComplex::default();
        assert_eq!(cubiclab_zeta_of(f, &mut zeta), CubiclabStatus::Domain);
        assert!(!CStr::from_ptr(cubiclab_last_error()).to_bytes().is_empty());
        cubiclab_family_free(f);
    }
}

#[test]
fn slice_and_dimension() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(cubiclab_slice_new(z(2.0, 0.0), CubiclabFamilyKind::Cubic, 3, &mut s), CubiclabStatus::Ok);
        let mut p = CubiclabSlicePoint::default();
        assert_eq!(cubiclab_slice_solve(s, z(-0.5, 0.0), ptr::null(), &mut p), CubiclabStatus::Ok);
        assert!(p.residual <= 1e-8);
        cubiclab_slice_free(s);

        let mut f = ptr::null_mut();
        assert_eq!(cubiclab_family_new(CubiclabFamilyKind::Cubic, 3, z(0.0, 0.0), z(10.0, 0.0), &mut f), CubiclabStatus::Ok);
        let mut e = CubiclabEstimate::default();
        assert_eq!(cubiclab_pressure_dimension(f, 5, &mut e), CubiclabStatus::Ok);
        assert!((e.value - 0.4171).abs() < 1e-3 && e.fit_residual.is_nan());
        cubiclab_family_free(f);
        cubiclab_family_free(ptr::null_mut());
    }
}

#[test]
fn omega_witness() {
    let (mut found, mut w) = (false, CubiclabOmegaWitness::default());
    unsafe {
        assert_eq!(cubiclab_omega_membership(0, 1, 3, 3, 1.0, z(1.0 / (4.0 + 1.0 / 5.5), 0.0), &mut found, &mut w), CubiclabStatus::Ok);
        assert!(found && w.sign1 == 1 && w.sign2 == 1 && w.a1 == 4 && w.a2 == 5, "{w:?}");
        assert!((w.beta.re - 0.5).abs() <= 1e-9);
        assert_eq!(cubiclab_omega_membership(0, 2, 3, 3, 1.0, z(0.2, 0.0), &mut found, &mut w), CubiclabStatus::Domain);
    }
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include").join("cubiclab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["cubiclab_family_new", "cubiclab_last_error", "CUBICLAB_STATUS_OK", "typedef struct CubiclabFamily CubiclabFamily"] {
        assert!(text.contains(name), "{name} missing from header");
    }

    // the static library is built next to this test binary in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    let lib = [deps.join("libcubiclab_ffi.a"), deps.parent().unwrap().join("libcubiclab_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
        .expect("libcubiclab_ffi.a not built");

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "cubiclab.h"
int main(void) {
    CubiclabFamily *f = NULL;
    CubiclabComplex a = {0.0, 0.0}, b = {0.0, 0.0}, w;
    if (cubiclab_family_new(CUBICLAB_FAMILY_KIND_CUBIC, 3, a, b, &f) != CUBICLAB_STATUS_OK) return 1;
    CubiclabComplex z = {2.0, 0.0};
    if (cubiclab_family_eval(f, z, &w) != CUBICLAB_STATUS_OK) return 2;
    cubiclab_family_free(f);
    if (cubiclab_family_eval(NULL, z, &w) != CUBICLAB_STATUS_NULL_POINTER) return 3;
    printf("%s %.1f %s\n", cubiclab_version(), w.re, cubiclab_last_error());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout), format!("{} 8.0 family is null\n", env!("CARGO_PKG_VERSION")));
}
