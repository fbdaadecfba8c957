use std::ffi::{CStr, CString};
use std::ptr;

use rtls_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rtls_last_error()) }.to_string_lossy().into_owned()
}

const ANCHORS: [f64; 15] = [
    0.0, 0.0, 2.5, 8.0, 0.0, 2.5, 0.0, 8.0, 2.5, 8.0, 8.0, 0.3, 4.0, 4.0, 0.0,
];

fn distances(truth: [f64; 3]) -> Vec<f64> {
    ANCHORS
        .chunks_exact(3)
        .map(|a| ((a[0] - truth[0]).powi(2) + (a[1] - truth[1]).powi(2) + (a[2] - truth[2]).powi(2)).sqrt())
        .collect()
}

#[test]
fn range_solvers_recover_noise_free_position() {
    let truth = [3.0, 5.0, 1.0];
    let d = distances(truth);
    let mut lm = RtlsSolverResult::default();
    let mut gl = RtlsSolverResult::default();
    unsafe {
        assert_eq!(rtls_lm_multilaterate(ANCHORS.as_ptr(), d.as_ptr(), 5, ptr::null(), 1e-8, &mut lm), RtlsStatus::Ok);
        assert_eq!(rtls_larsson_multilaterate(ANCHORS.as_ptr(), d.as_ptr(), 5, 1e-8, &mut gl), RtlsStatus::Ok);
    }
    for r in [lm, gl] {
        let err = ((r.x - truth[0]).powi(2) + (r.y - truth[1]).powi(2) + (r.z - truth[2]).powi(2)).sqrt();
        assert!(err < 1e-6, "{r:?}");
    }
    assert!(lm.converged);
    assert_eq!(last_error(), "");
}

#[test]
fn tdoa_and_gdop() {
    let q = [2.0, 2.0, 1.2];
    let truth = [5.0, 3.0, 1.0];
    let dq = distances(q);
    let dt = distances(truth);
    let qt = ((q[0] - truth[0]).powi(2) + (q[1] - truth[1]).powi(2) + (q[2] - truth[2]).powi(2)).sqrt();
    let diffs: Vec<f64> = dq.iter().zip(&dt).map(|(a, b)| a + b - qt).collect();
    let mut r = RtlsSolverResult::default();
    let mut gdop = 0.0;
    unsafe {
        assert_eq!(
            rtls_lm_tdoa(q.as_ptr(), ANCHORS.as_ptr(), diffs.as_ptr(), 5, truth.as_ptr(), 1e-8, &mut r),
            RtlsStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(rtls_gdop(ANCHORS.as_ptr(), 5, truth.as_ptr(), &mut gdop), RtlsStatus::Ok);
    }
    assert!((r.x - truth[0]).abs() < 1e-6 && (r.y - truth[1]).abs() < 1e-6);
    assert!(gdop.is_finite() && gdop > 0.0);
}

#[test]
fn precondition_and_null_errors_set_last_error() {
    let d = distances([1.0, 1.0, 1.0]);
    let mut r = RtlsSolverResult::default();
    unsafe {
        let status = rtls_lm_multilaterate(ANCHORS.as_ptr(), d.as_ptr(), 3, ptr::null(), 1e-2, &mut r);
        assert_eq!(status, RtlsStatus::SolverPrecondition);
        assert!(!last_error().is_empty());
        let status = rtls_lm_multilaterate(ptr::null(), d.as_ptr(), 5, ptr::null(), 1e-2, &mut r);
        assert_eq!(status, RtlsStatus::NullPointer);
        let status = rtls_larsson_multilaterate(ANCHORS.as_ptr(), d.as_ptr(), 5, -1.0, &mut r);
        assert_eq!(status, RtlsStatus::InvalidArgument);
        assert_eq!(rtls_anchor_event_cost(0, ptr::null_mut(), ptr::null_mut()), RtlsStatus::InvalidArgument);
    }
}

#[test]
fn anchor_cost_grows_with_slot() {
    let (mut e1, mut e5, mut t1, mut t5) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(rtls_anchor_event_cost(1, &mut e1, &mut t1), RtlsStatus::Ok);
        assert_eq!(rtls_anchor_event_cost(5, &mut e5, &mut t5), RtlsStatus::Ok);
    }
    assert!(e5 > e1 && t5 > t1 && e1 > 0.0);
}

#[test]
fn stepwise_run_matches_one_shot_run() {
    unsafe {
        let mut config = ptr::null_mut();
        assert_eq!(rtls_config_bundled(&mut config), RtlsStatus::Ok);
        assert_eq!(rtls_config_set_run(config, 7, 2, 4), RtlsStatus::Ok);
        let variant = CString::new("bounded_aimd").unwrap();
        assert_eq!(rtls_config_set_scheduler(config, variant.as_ptr()), RtlsStatus::Ok);

        let mut sim = ptr::null_mut();
        assert_eq!(rtls_sim_new(config, &mut sim), RtlsStatus::Ok);
        assert_eq!(rtls_sim_step(sim, 1000), RtlsStatus::Ok);
        assert_eq!(rtls_sim_minute(sim), 1000);
        assert_eq!(rtls_sim_step(sim, 2 * 1440 - 1000), RtlsStatus::Ok);
        let mut stepped = ptr::null_mut();
        assert_eq!(rtls_sim_finish(sim, &mut stepped), RtlsStatus::Ok);

        let mut whole = ptr::null_mut();
        assert_eq!(rtls_run(config, &mut whole), RtlsStatus::Ok);

        assert_eq!(rtls_stats_days(stepped), 2);
        let n = rtls_stats_node_count(whole);
        assert_eq!(n, rtls_stats_node_count(stepped));
        for node in 0..n {
            let (mut a, mut b) = (0.0, 0.0);
            assert_eq!(rtls_stats_final_soc(stepped, node, &mut a), RtlsStatus::Ok);
            assert_eq!(rtls_stats_final_soc(whole, node, &mut b), RtlsStatus::Ok);
            assert_eq!(a, b);
        }
        let mut soc = 0.0;
        assert_eq!(rtls_stats_final_soc(whole, n, &mut soc), RtlsStatus::InvalidArgument);
        assert_eq!(
            rtls_stats_mean_localizations_per_tag(whole),
            rtls_stats_mean_localizations_per_tag(stepped)
        );

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(rtls_stats_write(whole, path.as_ptr()), RtlsStatus::Ok);
        assert!(dir.path().join("stats_daily.csv").is_file());

        rtls_stats_free(stepped);
        rtls_stats_free(whole);
        rtls_config_free(config);
    }
}

#[test]
fn invalid_config_is_reported() {
    unsafe {
        let mut config = ptr::null_mut();
        let text = CString::new("days = 0\n").unwrap();
        assert_eq!(rtls_config_from_toml(text.as_ptr(), &mut config), RtlsStatus::InvalidConfig);
        assert!(config.is_null());
        assert!(!last_error().is_empty());

        let missing = CString::new("/nonexistent/rtls.toml").unwrap();
        assert_eq!(rtls_config_load(missing.as_ptr(), &mut config), RtlsStatus::Io);

        assert_eq!(rtls_config_bundled(&mut config), RtlsStatus::Ok);
        assert_eq!(rtls_config_set_run(config, 1, 0, -1), RtlsStatus::InvalidConfig);
        let bad = CString::new("fastest").unwrap();
        assert_eq!(rtls_config_set_scheduler(config, bad.as_ptr()), RtlsStatus::InvalidArgument);
        rtls_config_free(config);
        rtls_config_free(ptr::null_mut());
        rtls_sim_free(ptr::null_mut());
        rtls_stats_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(rtls_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles a small C program against the generated header and the static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn header_compiles_and_links_from_c() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    // The test binary lives in target/<profile>/deps; the staticlib one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("librtls_ffi.a");
    if !lib.is_file() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "rtls.h"
int main(void) {
    const double anchors[15] = {0,0,2.5, 8,0,2.5, 0,8,2.5, 8,8,0.3, 4,4,0};
    const double d[5] = {6.020797289, 7.228416147, 4.500000000, 5.872818744, 1.732050808};
    RtlsSolverResult r;
    if (rtls_lm_multilaterate(anchors, d, 5, NULL, 1e-8, &r) != RTLS_STATUS_OK) return 1;
    if (rtls_lm_multilaterate(anchors, d, 2, NULL, 1e-8, &r) != RTLS_STATUS_SOLVER_PRECONDITION) return 2;
    if (rtls_last_error()[0] == '\0') return 3;
    RtlsConfig *config = NULL;
    if (rtls_config_bundled(&config) != RTLS_STATUS_OK) return 4;
    rtls_config_free(config);
    printf("%.3f %.3f %.3f\n", r.x, r.y, r.z);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = std::process::Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3.000 5.000 1.000");
}
