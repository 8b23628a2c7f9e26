mod common;

use std::fs;

use common::cli::{ok, pipeline, sqp, write_inputs};

#[test]
fn every_command_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = pipeline(a.path(), "1");
    let second = pipeline(b.path(), "1");
    let parallel = pipeline(c.path(), "4");
    let names: Vec<_> = first.iter().map(|(p, _)| p.display().to_string()).collect();
    for want in ["eval.tsv", "rbp_res.tsv", "fused.run", "pool.json", "model.json", "assign.tsv", "report.tsv", "report.md", "report.per_query.tsv"] {
        assert!(names.iter().any(|n| n == want), "missing {want} in {names:?}");
    }
    assert_eq!(first, second);
    assert_eq!(first, parallel);
}

#[test]
fn eval_outputs_expected_cells() {
    let d = tempfile::tempdir().unwrap();
    write_inputs(d.path());
    ok(d.path(), "1", &["eval", "--runs", "runs", "--qrels", "qrels", "--metric", "p@2", "--out", "m.tsv"]);
    let text = fs::read_to_string(d.path().join("m.tsv")).unwrap();
    assert_eq!(text, "# metric: p@2\nbm25\tq1\t0.5\nbm25\tq2\t0.5\npl2\tq1\t1\npl2\tq2\t0.5\n");
    ok(d.path(), "1", &["fuse", "--runs", "runs/bm25.run,runs/pl2.run", "--norm", "none", "--out", "f.run"]);
    let fused = fs::read_to_string(d.path().join("f.run")).unwrap();
    assert!(fused.starts_with("q1 Q0 a 1 11 combsum\nq1 Q0 c 2 10 combsum\n"), "{fused}");
}

#[test]
fn exit_codes_separate_format_and_contract_errors() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    ok(dir, "1", &["synth", "--out-prefix", "s"]);
    fs::write(dir.join("bad.tsv"), "c1\tq1\n").unwrap();

    let code = |args: &[&str]| sqp(dir, "1", args).status.code();
    assert_eq!(code(&["select", "--matrix", "bad.tsv", "--baseline", "c1", "--k", "1", "--out", "p.json"]), Some(2));
    assert_eq!(code(&["select", "--matrix", "missing.tsv", "--baseline", "c1", "--k", "1", "--out", "p.json"]), Some(2));
    assert_eq!(code(&["select", "--matrix", "s.matrix.tsv", "--baseline", "nope", "--k", "1", "--out", "p.json"]), Some(3));
    assert_eq!(code(&["select", "--matrix", "s.matrix.tsv", "--baseline", "gen", "--k", "99", "--out", "p.json"]), Some(3));
    assert_eq!(code(&["experiment", "--matrix", "s.matrix.tsv", "--methods", "erisk_cosine", "--k", "3", "--out", "r"]), Some(3));
    assert_eq!(code(&["synth", "--gap", "0.7", "--out-prefix", "x"]), Some(3));
    assert_eq!(code(&["experiment", "--matrix", "s.matrix.tsv", "--methods", "bogus", "--out", "r"]), Some(2));
}
