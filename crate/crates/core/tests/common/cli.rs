use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn sqp(dir: &Path, workers: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqp"))
        .current_dir(dir)
        .env("SQP_WORKERS", workers)
        .args(args)
        .output()
        .expect("run sqp")
}

pub fn ok(dir: &Path, workers: &str, args: &[&str]) {
    let out = sqp(dir, workers, args);
    assert!(
        out.status.success(),
        "sqp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn write_inputs(dir: &Path) {
    fs::create_dir_all(dir.join("runs")).unwrap();
    fs::write(
        dir.join("runs/bm25.run"),
        "q1 Q0 a 1 9.0 bm25\nq1 Q0 b 2 8.0 bm25\nq1 Q0 c 3 7.0 bm25\nq2 Q0 d 1 5.0 bm25\nq2 Q0 e 2 4.0 bm25\n",
    )
    .unwrap();
    fs::write(
        dir.join("runs/pl2.run"),
        "q1 Q0 c 1 3.0 pl2\nq1 Q0 a 2 2.0 pl2\nq2 Q0 e 1 1.5 pl2\nq2 Q0 d 2 1.5 pl2\nq2 Q0 f 3 0.5 pl2\n",
    )
    .unwrap();
    fs::write(dir.join("qrels"), "q1 0 a 1\nq1 0 c 2\nq1 0 b 0\nq2 0 e 1\nq2 0 f 1\n").unwrap();
}

/// Runs the whole command set in `dir` and returns every output file.
pub fn pipeline(dir: &Path, workers: &str) -> Vec<(PathBuf, Vec<u8>)> {
    write_inputs(dir);
    ok(dir, workers, &["eval", "--runs", "runs", "--qrels", "qrels", "--metric", "ndcg@3", "--out", "eval.tsv"]);
    ok(dir, workers, &["eval", "--runs", "runs", "--qrels", "qrels", "--metric", "rbp:0.5:3", "--out", "rbp.tsv", "--rbp-residuals", "rbp_res.tsv"]);
    ok(dir, workers, &["fuse", "--runs", "runs/bm25.run,runs/pl2.run", "--norm", "minmax", "--out", "fused.run"]);
    ok(dir, workers, &["synth", "--seed", "3", "--out-prefix", "s"]);
    ok(dir, workers, &["select", "--matrix", "s.matrix.tsv", "--baseline", "gen", "--objective", "e", "--k", "5", "--out", "pool.json"]);
    ok(dir, workers, &["select", "--matrix", "s.matrix.tsv", "--baseline", "gen", "--objective", "n", "--beta", "0.5", "--k", "4", "--out", "pool_n.json"]);
    ok(dir, workers, &["train", "--matrix", "s.matrix.tsv", "--pool", "pool.json", "--features", "s.features.tsv", "--zscore", "--out", "model.json"]);
    ok(dir, workers, &["match", "--model", "model.json", "--features", "s.features.tsv", "--out", "assign.tsv"]);
    ok(dir, workers, &[
        "experiment", "--matrix", "s.matrix.tsv", "--features", "s.features.tsv", "--descriptors", "s.descriptors.tsv",
        "--methods", "best_trained,erisk_cosine,nrisk_cosine,randomk_cosine,sqe_cosine,oracle_k,oracle_random_k,oracle",
        "--draws", "3", "--seed", "42", "--k", "5", "--objective", "e", "--out", "report.tsv",
    ]);
    let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

