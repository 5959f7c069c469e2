use std::ffi::{c_char, CStr, CString};
use std::ptr;

use fpp_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        fpp_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

struct Model(*mut FppModel);

impl Drop for Model {
    fn drop(&mut self) {
        unsafe { fpp_model_free(self.0) }
    }
}

fn free2() -> Model {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fpp_model_new_free(2, &mut m) }, FppStatus::Ok);
    Model(m)
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(fpp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn distance_lambda_cone_gromov_on_f2() {
    let m = free2();
    let mut d = 0u64;
    assert_eq!(unsafe { fpp_distance(m.0, c("1").as_ptr(), c("abab").as_ptr(), &mut d) }, FppStatus::Ok);
    assert_eq!(d, 4);
    let mut lambda = 0.0;
    assert_eq!(unsafe { fpp_lambda(m.0, &mut lambda) }, FppStatus::Ok);
    assert!((lambda - 3.0).abs() < 1e-9);
    let mut cone = 0.0;
    assert_eq!(unsafe { fpp_cone_measure(m.0, c("a").as_ptr(), &mut cone) }, FppStatus::Ok);
    assert!((cone - 0.25).abs() < 1e-12);
    let mut gp = -1.0;
    let status = unsafe { fpp_gromov_product(m.0, c("a^2").as_ptr(), c("b^2").as_ptr(), c("1").as_ptr(), &mut gp) };
    assert_eq!(status, FppStatus::Ok);
    assert_eq!(gp, 0.0);
}

#[test]
fn model_from_config_text() {
    let cfg = c("[model]\nkind = \"cyclic-multi\"\nmax_step = 2\n");
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fpp_model_new(cfg.as_ptr(), &mut m) }, FppStatus::Ok);
    let m = Model(m);
    let mut d = 0;
    assert_eq!(unsafe { fpp_distance(m.0, c("0").as_ptr(), c("10").as_ptr(), &mut d) }, FppStatus::Ok);
    assert_eq!(d, 5);
}

#[test]
fn passage_time_on_tree_is_geodesic_sum() {
    let m = free2();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { fpp_environment_new(c("").as_ptr(), 7, &mut env) }, FppStatus::Ok);
    let (mut t, mut edges) = (0.0, 0u64);
    let status =
        unsafe { fpp_passage_time(m.0, env, c("1").as_ptr(), c("a^3").as_ptr(), 2, &mut t, &mut edges) };
    assert_eq!(status, FppStatus::Ok);
    assert_eq!(edges, 3);
    // same environment through the Rust API
    let model = fpp_core::group::GroupModel::free(2);
    let e = fpp_core::environment::Environment::new(
        7,
        fpp_core::environment::WeightDistribution::Uniform { a: 0.0, b: 1.0 },
    );
    let path = model.word_geodesic(&model.parse_element("1").unwrap(), &model.parse_element("a^3").unwrap()).unwrap();
    let expect = fpp_core::metric::path_weight(&model, &e, &path).unwrap();
    assert_eq!(t, expect);
    // edges may be null
    let status =
        unsafe { fpp_passage_time(m.0, env, c("1").as_ptr(), c("b").as_ptr(), 1, &mut t, ptr::null_mut()) };
    assert_eq!(status, FppStatus::Ok);
    unsafe { fpp_environment_free(env) };
}

#[test]
fn errors_map_to_status_codes() {
    let m = free2();
    let mut d = 0;
    assert_eq!(unsafe { fpp_distance(ptr::null(), c("a").as_ptr(), c("b").as_ptr(), &mut d) }, FppStatus::NullPointer);
    assert!(last_error().contains("model"));
    assert_eq!(unsafe { fpp_distance(m.0, c("c").as_ptr(), c("b").as_ptr(), &mut d) }, FppStatus::Parse);
    assert!(last_error().contains("`c`"), "{}", last_error());
    assert_eq!(unsafe { fpp_distance(m.0, c("a").as_ptr(), c("b").as_ptr(), ptr::null_mut()) }, FppStatus::NullPointer);

    let mut env = ptr::null_mut();
    let atoms = c("[distribution]\nkind = \"bernoulli\"\n");
    assert_eq!(unsafe { fpp_environment_new(atoms.as_ptr(), 1, &mut env) }, FppStatus::Config);
    assert!(env.is_null());
    assert_eq!(unsafe { fpp_model_new_free(0, &mut ptr::null_mut()) }, FppStatus::InvalidArgument);

    // a successful call clears the message
    assert_eq!(unsafe { fpp_distance(m.0, c("a").as_ptr(), c("b").as_ptr(), &mut d) }, FppStatus::Ok);
    assert_eq!(unsafe { fpp_last_error_message(ptr::null_mut(), 0) }, 0);
}

#[test]
fn error_message_is_truncated_and_terminated() {
    let m = free2();
    let mut d = 0;
    unsafe { fpp_distance(m.0, c("zzz").as_ptr(), c("b").as_ptr(), &mut d) };
    let full = unsafe { fpp_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 8];
    assert_eq!(unsafe { fpp_last_error_message(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(buf[7], 0);
    assert!(full > 7);
}

#[test]
fn free_accepts_null() {
    unsafe {
        fpp_model_free(ptr::null_mut());
        fpp_environment_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fpp.h")).unwrap();
    for name in [
        "fpp_version",
        "fpp_last_error_message",
        "fpp_model_new",
        "fpp_model_new_free",
        "fpp_model_free",
        "fpp_distance",
        "fpp_lambda",
        "fpp_cone_measure",
        "fpp_gromov_product",
        "fpp_environment_new",
        "fpp_environment_free",
        "fpp_passage_time",
        "FPP_STATUS_PANIC = 9",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the static library, when a C
/// compiler and the library are available.
#[test]
fn c_program_links_against_static_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libfpp_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "fpp.h"
int main(void) {
    FppModel *m = NULL;
    if (fpp_model_new_free(2, &m) != FPP_STATUS_OK) return 1;
    uint64_t d = 0;
    if (fpp_distance(m, "1", "ab^-1a", &d) != FPP_STATUS_OK || d != 3) return 2;
    double lambda = 0;
    if (fpp_lambda(m, &lambda) != FPP_STATUS_OK || lambda < 2.999 || lambda > 3.001) return 3;
    if (fpp_distance(m, "q", "1", &d) != FPP_STATUS_PARSE) return 4;
    char buf[128];
    if (fpp_last_error_message(buf, sizeof buf) == 0) return 5;
    fpp_model_free(m);
    printf("ok %s\n", fpp_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let compiled = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status();
    match compiled {
        Ok(s) if s.success() => {}
        Ok(s) => panic!("C compilation failed: {s}"),
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    }
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
