use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use wittenlab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(wl_last_error_message()) }.to_string_lossy().into_owned()
}

const TORUS: &str = r#"{"experiment": "ffi", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8}}"#;

#[test]
fn config_round_trip_and_run() {
    let json = CString::new(TORUS).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { wl_config_parse(json.as_ptr(), &mut cfg) }, WlStatus::Ok);
    let mut hash = [0 as std::ffi::c_char; 65];
    assert_eq!(unsafe { wl_config_hash(cfg, hash.as_mut_ptr(), 10) }, WlStatus::BufferTooSmall);
    assert_eq!(unsafe { wl_config_hash(cfg, hash.as_mut_ptr(), hash.len()) }, WlStatus::Ok);
    let hash = unsafe { CStr::from_ptr(hash.as_ptr()) }.to_str().unwrap().to_owned();
    assert_eq!(hash.len(), 64);

    let cmd = CString::new("spectra").unwrap();
    let mut art = ptr::null_mut();
    assert_eq!(unsafe { wl_run(cfg, cmd.as_ptr(), &mut art) }, WlStatus::Ok);
    let n = unsafe { wl_artifacts_count(art) };
    let names: Vec<String> = (0..n).map(|i| unsafe { CStr::from_ptr(wl_artifacts_name(art, i)) }.to_str().unwrap().to_owned()).collect();
    assert!(names.contains(&"summary.json".to_owned()));
    assert!(unsafe { wl_artifacts_name(art, n) }.is_null());

    let name = CString::new("spectrum_q0.csv").unwrap();
    let (mut data, mut len) = (ptr::null(), 0usize);
    assert_eq!(unsafe { wl_artifacts_get(art, name.as_ptr(), &mut data, &mut len) }, WlStatus::Ok);
    let csv = std::str::from_utf8(unsafe { std::slice::from_raw_parts(data, len) }).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# config_hash={hash}"));

    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { wl_artifacts_write(art, d.as_ptr()) }, WlStatus::Ok);
    assert!(dir.path().join("out/summary.json").exists());

    let bad = CString::new("nonsense").unwrap();
    let mut other = ptr::null_mut();
    assert_eq!(unsafe { wl_run(cfg, bad.as_ptr(), &mut other) }, WlStatus::InvalidArgument);
    assert!(other.is_null());
    unsafe {
        wl_artifacts_free(art);
        wl_config_free(cfg);
    }
}

#[test]
fn config_errors_map_to_status_codes() {
    let json = CString::new(r#"{"experiment": "x", "manifold": {"topology": "torus", "dimension": 9, "resolution": 8}}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { wl_config_parse(json.as_ptr(), &mut cfg) }, WlStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("manifold.dimension"), "{}", last_error());
    assert_eq!(unsafe { wl_config_parse(ptr::null(), &mut cfg) }, WlStatus::NullPointer);
    assert_eq!(unsafe { wl_config_set_seed(ptr::null_mut(), 1) }, WlStatus::NullPointer);
    assert_eq!(last_error(), "null handle");
    unsafe { wl_config_free(ptr::null_mut()) };
}

#[test]
fn complex_queries() {
    let mut cx = ptr::null_mut();
    assert_eq!(unsafe { wl_complex_torus(2, 8, ptr::null(), &mut cx) }, WlStatus::Ok);
    let mut buf = [0usize; 3];
    let mut len = 0;
    assert_eq!(unsafe { wl_complex_dims(cx, buf.as_mut_ptr(), 3, &mut len) }, WlStatus::Ok);
    assert_eq!(buf, [64, 128, 64]);
    assert_eq!(unsafe { wl_complex_betti(cx, buf.as_mut_ptr(), 1, &mut len) }, WlStatus::BufferTooSmall);
    assert_eq!(len, 3);
    assert_eq!(unsafe { wl_complex_betti(cx, buf.as_mut_ptr(), 3, &mut len) }, WlStatus::Ok);
    assert_eq!(buf, [1, 2, 1]);
    let mut spec = [0.0; 5];
    assert_eq!(unsafe { wl_complex_spectrum(cx, 0, 5, spec.as_mut_ptr()) }, WlStatus::Ok);
    assert!(spec[0].abs() < 1e-10);
    let first = (2.0 * 8.0 * (std::f64::consts::PI / 8.0).sin()).powi(2);
    assert!((spec[1] - first).abs() < 1e-9 * first);
    assert_eq!(unsafe { wl_complex_spectrum(cx, 3, 5, spec.as_mut_ptr()) }, WlStatus::InvalidArgument);
    let mut lt = f64::NAN;
    assert_eq!(unsafe { wl_complex_log_torsion(cx, &mut lt) }, WlStatus::Ok);
    assert!(lt.is_finite());
    unsafe { wl_complex_free(cx) };

    assert_eq!(unsafe { wl_complex_torus(4, 8, ptr::null(), &mut cx) }, WlStatus::InvalidArgument);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { wl_complex_icosphere(1, &mut s) }, WlStatus::Ok);
    assert_eq!(unsafe { wl_complex_betti(s, buf.as_mut_ptr(), 3, &mut len) }, WlStatus::Ok);
    assert_eq!(buf, [1, 0, 1]);
    unsafe { wl_complex_free(s) };
}

#[test]
fn header_compiles_as_c_and_cxx() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("wittenlab.h")).unwrap();
    for f in ["wl_config_parse", "wl_run", "wl_artifacts_get", "wl_complex_log_torsion", "wl_last_error_message"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"wittenlab.h\"\nint main(void) { WlComplex *c = 0; enum WlStatus s = wl_complex_torus(2, 8, 0, &c); wl_complex_free(c); return s == WL_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = match Command::new(compiler).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"]).arg(&include).arg(&src).status() {
            Ok(s) => s,
            Err(_) => {
                eprintln!("{compiler} not available; skipped");
                continue;
            }
        };
        assert!(status.success(), "{compiler} rejected the header");
    }

    let libdir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if !libdir.join("libwittenlab_ffi.so").exists() {
        eprintln!("shared library not built; link test skipped");
        return;
    }
    let exe = dir.path().join("use");
    let Ok(status) = Command::new("cc").arg("-I").arg(&include).arg(&src).arg("-L").arg(&libdir).args(["-lwittenlab_ffi", "-o"]).arg(&exe).status() else {
        return;
    };
    assert!(status.success(), "link failed");
    let run = Command::new(&exe).env("LD_LIBRARY_PATH", &libdir).status().unwrap();
    assert!(run.success(), "C program returned {run}");
}
