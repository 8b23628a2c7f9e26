use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use sqp_ffi::*;

const TOY: &str = "# metric: toy\n\
c1\tq1\t0.4\nc1\tq2\t0.6\nc1\tq3\t0.4\nc1\tq4\t0.9\nc1\tq5\t0.6\nc1\tq6\t0.6\nc1\tq7\t0.5\n\
c2\tq1\t0.6\nc2\tq2\t0.7\nc2\tq3\t0.5\nc2\tq4\t0.2\nc2\tq5\t0.8\nc2\tq6\t0.7\nc2\tq7\t0.6\n\
c3\tq1\t0.4\nc3\tq2\t0.5\nc3\tq3\t0.6\nc3\tq4\t0.2\nc3\tq5\t0.5\nc3\tq6\t0.6\nc3\tq7\t0.5\n";

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { sqp_string_free(s) };
    out
}

fn toy() -> *mut SqpMatrix {
    let tsv = CString::new(TOY).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sqp_matrix_parse(tsv.as_ptr(), &mut m) }, SqpStatus::Ok);
    m
}

#[test]
fn toy_selection_through_handles() {
    let m = toy();
    unsafe {
        assert_eq!(sqp_matrix_num_configs(m), 3);
        assert_eq!(sqp_matrix_num_queries(m), 7);
        let mut score = 0.0;
        let (c, q) = (CString::new("c1").unwrap(), CString::new("q4").unwrap());
        assert_eq!(sqp_matrix_score(m, c.as_ptr(), q.as_ptr(), &mut score), SqpStatus::Ok);
        assert_eq!(score, 0.9);

        let base = CString::new("c2").unwrap();
        let mut pool = ptr::null_mut();
        assert_eq!(
            sqp_select(m, base.as_ptr(), SqpObjective::Effectiveness, 0.0, 3, &mut pool),
            SqpStatus::Ok
        );
        assert_eq!(sqp_pool_len(pool), 3);
        let ids: Vec<String> = (0..3)
            .map(|i| {
                let mut s = ptr::null_mut();
                assert_eq!(sqp_pool_config_id(pool, i, &mut s), SqpStatus::Ok);
                take(s)
            })
            .collect();
        assert_eq!(ids, ["c2", "c1", "c3"]);
        let mut step = SqpStep::default();
        assert_eq!(sqp_pool_step(pool, 1, &mut step), SqpStatus::Ok);
        assert!((step.gain + 1.0 / 70.0).abs() < 1e-12);
        assert_eq!(sqp_pool_step(pool, 3, &mut step), SqpStatus::OutOfRange);
        assert!(take(sqp_last_error()).contains("out of range"));

        let mut json = ptr::null_mut();
        assert_eq!(sqp_pool_to_json(pool, &mut json), SqpStatus::Ok);
        assert!(take(json).contains("\"c3\""));
        sqp_pool_free(pool);
        sqp_matrix_free(m);
    }
}

#[test]
fn error_codes_follow_cli_exit_codes() {
    let m = toy();
    unsafe {
        let missing = CString::new("c9").unwrap();
        let mut pool = ptr::null_mut();
        let st = sqp_select(m, missing.as_ptr(), SqpObjective::QueryCount, 0.0, 2, &mut pool);
        assert_eq!(st, SqpStatus::Contract);
        assert!(pool.is_null());
        assert!(take(sqp_last_error()).contains("c9"));

        let bad = CString::new("c1\tq1\n").unwrap();
        let mut m2 = ptr::null_mut();
        assert_eq!(sqp_matrix_parse(bad.as_ptr(), &mut m2), SqpStatus::Input);
        assert_eq!(sqp_matrix_parse(ptr::null(), &mut m2), SqpStatus::NullPointer);

        // success clears the previous message
        let mut score = 0.0;
        let (c, q) = (CString::new("c3").unwrap(), CString::new("q3").unwrap());
        assert_eq!(sqp_matrix_score(m, c.as_ptr(), q.as_ptr(), &mut score), SqpStatus::Ok);
        assert!(sqp_last_error().is_null());
        sqp_matrix_free(m);
        sqp_matrix_free(ptr::null_mut());
    }
}

#[test]
fn t_test_matches_reference_value() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [0.0; 5];
    let (mut t, mut p) = (0.0, 0.0);
    let st = unsafe { sqp_paired_t_test(a.as_ptr(), b.as_ptr(), 5, &mut t, &mut p) };
    assert_eq!(st, SqpStatus::Ok);
    assert!((t - 4.242641).abs() < 1e-6);
    assert!((p - 0.0132).abs() < 1e-3);
    let st = unsafe { sqp_paired_t_test(a.as_ptr(), b.as_ptr(), 1, &mut t, &mut p) };
    assert_eq!(st, SqpStatus::Contract);
}

#[test]
fn model_round_trip_from_cli_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("m.tsv"), TOY).unwrap();
    let mut feats = String::new();
    for (i, q) in ["q1", "q2", "q3", "q4", "q5", "q6", "q7"].iter().enumerate() {
        feats += &format!("{q}\td1\tx\t{}\n{q}\td1\ty\t{}\n", 1.0 + i as f64, 7.0 - i as f64);
    }
    std::fs::write(d.join("f.tsv"), feats).unwrap();
    let pool = sqp_core::selection::select_configurations(
        &sqp_core::data::EffectivenessMatrix::load(d.join("m.tsv")).unwrap(),
        &["q1", "q2", "q3", "q4", "q5", "q6", "q7"].map(|q| q.parse().unwrap()),
        &["c1", "c2", "c3"].map(|c| c.parse().unwrap()),
        &sqp_core::selection::RiskParams::new(
            sqp_core::selection::Objective::Effectiveness,
            0.0,
            3,
            "c2".parse().unwrap(),
        ),
    )
    .unwrap();
    std::fs::write(d.join("pool.json"), pool.to_json().unwrap()).unwrap();
    let vectors = sqp_core::matcher::aggregate_all(
        &sqp_core::data::load_features(d.join("f.tsv")).unwrap(),
        10,
    )
    .unwrap();
    let matrix = sqp_core::data::EffectivenessMatrix::load(d.join("m.tsv")).unwrap();
    use sqp_core::data::ScoreSource;
    let model = sqp_core::matcher::TrainedModel::train(
        &matrix,
        matrix.queries(),
        &pool.config_ids(),
        &vectors,
        &Default::default(),
    )
    .unwrap();
    std::fs::write(d.join("model.json"), model.to_json().unwrap()).unwrap();

    let path = CString::new(d.join("model.json").to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(sqp_model_load(path.as_ptr(), &mut h), SqpStatus::Ok);
        let n = sqp_model_num_features(h);
        let names: Vec<String> = (0..n)
            .map(|i| {
                let mut s = ptr::null_mut();
                assert_eq!(sqp_model_feature_name(h, i, &mut s), SqpStatus::Ok);
                take(s)
            })
            .collect();
        assert_eq!(names, ["x.mean", "x.std", "x.max", "y.mean", "y.std", "y.max"]);
        // q4's vector: x=4, y=4 with a single document
        let values = [4.0, 0.0, 4.0, 4.0, 0.0, 4.0];
        let q = CString::new("new").unwrap();
        let mut cfg = ptr::null_mut();
        let mut sim = 0.0;
        assert_eq!(
            sqp_model_match(h, q.as_ptr(), values.as_ptr(), values.len(), &mut cfg, &mut sim),
            SqpStatus::Ok
        );
        assert_eq!(take(cfg), "c1");
        assert!((sim - 1.0).abs() < 1e-12);
        let st = sqp_model_match(h, q.as_ptr(), values.as_ptr(), 2, &mut cfg, ptr::null_mut());
        assert_eq!(st, SqpStatus::Input);
        sqp_model_free(h);
    }
}

#[test]
fn generated_header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sqp.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["sqp_matrix_load", "sqp_select", "sqp_model_match", "sqp_paired_t_test", "sqp_last_error"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler on PATH; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
