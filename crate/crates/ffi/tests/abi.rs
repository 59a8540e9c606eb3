use std::ffi::{CStr, CString};
use std::ptr;

use lorhol_ffi::*;

fn demo(name: &str) -> *mut LhChart {
    let name = CString::new(name).unwrap();
    let mut chart = ptr::null_mut();
    assert_eq!(unsafe { lh_chart_from_demo(name.as_ptr(), &mut chart) }, LhStatus::Ok);
    assert!(!chart.is_null());
    chart
}

fn last_error() -> String {
    let p = lh_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn center(chart: *const LhChart) -> Vec<f64> {
    let d = unsafe { lh_chart_dim(chart) };
    let (mut lo, mut hi) = (vec![0.0; d], vec![0.0; d]);
    assert_eq!(unsafe { lh_chart_domain(chart, lo.as_mut_ptr(), hi.as_mut_ptr(), d) }, LhStatus::Ok);
    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
}

#[test]
fn flat_demo_tensors() {
    let c = demo("flat");
    let d = unsafe { lh_chart_dim(c) };
    let p = center(c);
    let mut g = vec![0.0; d * d];
    assert_eq!(unsafe { lh_metric(c, p.as_ptr(), d, g.as_mut_ptr(), g.len()) }, LhStatus::Ok);
    for i in 0..d {
        for j in 0..d {
            assert_eq!(g[i * d + j], g[j * d + i]);
        }
    }
    let mut gam = vec![1.0; d.pow(3)];
    assert_eq!(unsafe { lh_christoffel(c, p.as_ptr(), d, gam.as_mut_ptr(), gam.len()) }, LhStatus::Ok);
    assert!(gam.iter().all(|v| v.abs() < 1e-12));
    let mut r = vec![1.0; d.pow(4)];
    assert_eq!(unsafe { lh_riemann(c, p.as_ptr(), d, r.as_mut_ptr(), r.len()) }, LhStatus::Ok);
    assert!(r.iter().all(|v| v.abs() < 1e-12));
    let (mut neg, mut pos) = (0, 0);
    assert_eq!(unsafe { lh_signature(c, p.as_ptr(), d, &mut neg, &mut pos) }, LhStatus::Ok);
    assert_eq!((neg, pos), (1, d - 1));
    unsafe { lh_chart_free(c) };
}

#[test]
fn riemann_layout_matches_core() {
    let c = demo("toric-prwave");
    let d = unsafe { lh_chart_dim(c) };
    let p = center(c);
    let mut r = vec![0.0; d.pow(4)];
    assert_eq!(unsafe { lh_riemann(c, p.as_ptr(), d, r.as_mut_ptr(), r.len()) }, LhStatus::Ok);
    let core = lorhol::constructions::demo("toric-prwave").unwrap();
    let rc = core.chart.riemann(&lorhol::expr::Point::new(p.clone())).unwrap();
    let mut worst = 0.0f64;
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((r[((l * d + i) * d + j) * d + k] - rc.get(l, i, j, k)).abs());
                }
            }
        }
    }
    assert_eq!(worst, 0.0);
    assert!(rc.max_abs() > 0.0);
    unsafe { lh_chart_free(c) };
}

#[test]
fn holonomy_json_reports_label() {
    let c = demo("toric-ppwave");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lh_holonomy_json(c, 7, &mut s) }, LhStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { lh_string_free(s) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["holonomy"]["report"]["type_label"], "Type2");
    assert_eq!(v["holonomy"]["report"]["dim"], 2);
    unsafe { lh_chart_free(c) };
}

#[test]
fn errors_set_status_and_message() {
    let mut chart = ptr::null_mut();
    let bad = CString::new("no-such-demo").unwrap();
    assert_eq!(unsafe { lh_chart_from_demo(bad.as_ptr(), &mut chart) }, LhStatus::Config);
    assert!(chart.is_null());
    assert!(!last_error().is_empty());

    let src = CString::new("[metric]\nkind = \"walker\"\n").unwrap();
    assert_eq!(unsafe { lh_chart_from_toml(src.as_ptr(), &mut chart) }, LhStatus::Config);
    assert!(last_error().contains('n'));

    assert_eq!(unsafe { lh_chart_from_demo(ptr::null(), &mut chart) }, LhStatus::NullPointer);

    let c = demo("flat");
    let d = unsafe { lh_chart_dim(c) };
    let p = center(c);
    let mut small = vec![0.0; d];
    assert_eq!(unsafe { lh_metric(c, p.as_ptr(), d, small.as_mut_ptr(), small.len()) }, LhStatus::BufferTooSmall);
    let mut g = vec![0.0; d * d];
    assert_eq!(unsafe { lh_metric(c, p.as_ptr(), d - 1, g.as_mut_ptr(), g.len()) }, LhStatus::DimensionMismatch);
    let cmd = CString::new("frobnicate").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lh_run_json(c, cmd.as_ptr(), 0, &mut s) }, LhStatus::Config);
    assert!(s.is_null());
    unsafe { lh_chart_free(c) };
    assert_eq!(unsafe { lh_chart_dim(ptr::null()) }, 0);
}

#[test]
fn toml_chart_runs_check() {
    let src = CString::new("[metric]\nkind = \"walker\"\nn = 2\nf = \"sin(y1)*cos(z)\"\nu = [\"0\", \"y1\"]\n").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { lh_chart_from_toml(src.as_ptr(), &mut c) }, LhStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { lh_chart_dim(c) }, 4);
    let cmd = CString::new("check").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lh_run_json(c, cmd.as_ptr(), 3, &mut s) }, LhStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    assert_eq!(v["command"], "check");
    unsafe {
        lh_string_free(s);
        lh_chart_free(c);
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(lh_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
