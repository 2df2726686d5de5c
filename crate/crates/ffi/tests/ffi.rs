use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use nalgebra::DMatrix;
use structfactor::cca_factor::{self, FactorConfig};
use structfactor::detrend;
use structfactor::simlab::{generate, DgpConfig};
use structfactor_ffi::*;

fn panel_values() -> (Vec<f64>, usize, usize) {
    let inst = generate(&DgpConfig {
        p: 4,
        t: 240,
        r: 2,
        k0: 2,
        d0: 1,
        s: 12,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    let y = inst.panel.values();
    let mut v = Vec::new();
    for i in 0..y.nrows() {
        v.extend(y.row(i).iter());
    }
    (v, y.nrows(), y.ncols())
}

fn last_error() -> String {
    let p = sf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn round_trip_matches_library() {
    let (values, p, t) = panel_values();
    unsafe {
        let mut panel = ptr::null_mut();
        assert_eq!(
            sf_panel_from_values(values.as_ptr(), p, t, 12, &mut panel),
            SfStatus::Ok
        );
        assert_eq!((sf_panel_n_series(panel), sf_panel_len(panel)), (p, t));

        let mut dec = ptr::null_mut();
        assert_eq!(sf_decompose(panel, -1, -1, &mut dec), SfStatus::Ok);
        let (mut k, mut d) = (0usize, 0usize);
        assert_eq!(sf_decomposition_order(dec, &mut k, &mut d), SfStatus::Ok);
        assert_eq!((k, d), (2, 1));

        let mut irregular = vec![0.0; p * t];
        assert_eq!(
            sf_decomposition_irregular(dec, irregular.as_mut_ptr(), irregular.len()),
            SfStatus::Ok
        );

        let lib_panel = structfactor::TimePanel::from_matrix(DMatrix::from_row_slice(p, t, &values), 12).unwrap();
        let lib_dec = detrend::fit(&lib_panel, detrend::OrderSpec::new(1, 2, 12)).unwrap();
        assert_eq!(DMatrix::from_row_slice(p, t, &irregular), lib_dec.irregular);

        let mut model = ptr::null_mut();
        assert_eq!(sf_factors(dec, 2, 0.05, -1, &mut model), SfStatus::Ok);
        let r = sf_factor_model_r(model);
        let (lib_model, _) = cca_factor::analyze(&lib_dec.irregular, &FactorConfig::default(), None).unwrap();
        assert_eq!(r, lib_model.r);
        assert!(r >= 1);

        let mut loadings = vec![0.0; p * r];
        assert_eq!(
            sf_factor_model_loadings(model, loadings.as_mut_ptr(), loadings.len()),
            SfStatus::Ok
        );
        assert_eq!(DMatrix::from_row_slice(p, r, &loadings), lib_model.factor_loadings());

        let mut eig = vec![0.0; p];
        assert_eq!(sf_factor_model_eigenvalues(model, eig.as_mut_ptr(), p), SfStatus::Ok);
        assert!(eig.windows(2).all(|w| w[0] >= w[1]));

        let mut factors = vec![0.0; r * t];
        assert_eq!(
            sf_factor_model_factors(model, factors.as_mut_ptr(), factors.len()),
            SfStatus::Ok
        );
        assert_eq!(DMatrix::from_row_slice(r, t, &factors), lib_model.factors);

        sf_factor_model_free(model);
        sf_decomposition_free(dec);
        sf_panel_free(panel);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut panel = ptr::null_mut();
        assert_eq!(
            sf_panel_from_values(ptr::null(), 2, 3, 4, &mut panel),
            SfStatus::NullPointer
        );
        assert!(last_error().contains("values"));
        assert!(panel.is_null());

        let path = CString::new("/no/such/panel.csv").unwrap();
        assert_eq!(sf_panel_read_csv(path.as_ptr(), 4, &mut panel), SfStatus::Io);

        let bad = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(bad.path(), "time,a\n1,1.0\n2,x\n").unwrap();
        let bad_path = CString::new(bad.path().to_str().unwrap()).unwrap();
        assert_eq!(sf_panel_read_csv(bad_path.as_ptr(), 2, &mut panel), SfStatus::Parse);
        assert!(last_error().contains("row 2"), "{}", last_error());

        let flat = vec![1.0; 2 * 40];
        assert_eq!(sf_panel_from_values(flat.as_ptr(), 2, 40, 4, &mut panel), SfStatus::Ok);
        let mut dec = ptr::null_mut();
        assert_eq!(sf_decompose(panel, 0, 0, &mut dec), SfStatus::Ok);
        let mut small = [0.0; 3];
        assert_eq!(
            sf_decomposition_irregular(dec, small.as_mut_ptr(), 3),
            SfStatus::BufferTooSmall
        );
        let mut model = ptr::null_mut();
        assert_eq!(sf_factors(dec, 2, 0.05, -1, &mut model), SfStatus::Numeric);
        assert!(model.is_null());

        assert_eq!(sf_decompose(ptr::null(), 0, 0, &mut dec), SfStatus::NullPointer);
        assert_eq!(sf_panel_len(ptr::null()), 0);
        sf_decomposition_free(dec);
        sf_panel_free(panel);
        sf_panel_free(ptr::null_mut());
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(sf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/structfactor.h")
}

#[test]
fn header_declares_surface() {
    let text = std::fs::read_to_string(header()).unwrap();
    for needle in [
        "typedef struct SfPanel SfPanel;",
        "typedef struct SfDecomposition SfDecomposition;",
        "typedef struct SfFactorModel SfFactorModel;",
        "SF_STATUS_OK = 0",
        "SF_STATUS_NUMERIC",
        "sf_panel_read_csv(",
        "sf_decompose(",
        "sf_factors(",
        "sf_factor_model_free(",
        "sf_last_error_message(void)",
    ] {
        assert!(text.contains(needle), "header lacks {needle}");
    }
}

/// Compile and run a small C program against the static library when a C
/// compiler is available.
#[test]
fn c_smoke_test() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    if !cc.status.success() {
        return;
    }
    let target_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/debug");
    let lib = target_dir.join("libstructfactor_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built; skipping");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "structfactor.h"
int main(void) {
    double y[2 * 24];
    for (int t = 0; t < 24; ++t) { y[t] = t; y[24 + t] = 2.0 * t + 1.0; }
    SfPanel *panel = NULL;
    if (sf_panel_from_values(y, 2, 24, 4, &panel) != SF_STATUS_OK) return 1;
    SfDecomposition *dec = NULL;
    if (sf_decompose(panel, 0, 1, &dec) != SF_STATUS_OK) return 2;
    size_t k = 9, d = 9;
    sf_decomposition_order(dec, &k, &d);
    if (k != 0 || d != 1) return 3;
    SfStatus st = sf_decompose(NULL, 0, 0, &dec);
    if (st != SF_STATUS_NULL_POINTER || sf_last_error_message() == NULL) return 4;
    sf_decomposition_free(dec);
    sf_panel_free(panel);
    printf("%s\n", sf_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
