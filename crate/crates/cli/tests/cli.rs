use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scriptgap"));
    cmd.env_remove("SCRIPTGAP_TABLES");
    cmd
}

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child =
        bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn romanizes_stdin() {
    let out = with_stdin(&["romanize"], "Александр\n乌克兰总统候选人泽连斯基\n");
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "Aleksandr\nwukelanzongtonghouxuanrenzeliansiji\n");
}

#[test]
fn romanizes_query_files_and_enforces_unmapped_limit() {
    let dir = workdir("romanize-queries");
    std::fs::write(dir.join("q.tsv"), "1\tпривет мир\n2\tשלום\n").unwrap();
    let out = run(&dir, &["romanize", "--queries", "-i", "q.tsv"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1\tprivet mir\n2\tשלום\n");
    assert_eq!(run(&dir, &["romanize", "--queries", "-i", "q.tsv", "--max-unmapped", "3"]).status.code(), Some(3));
}

#[test]
fn custom_tables_from_flag_and_environment() {
    let dir = workdir("custom-tables");
    std::fs::write(dir.join("cy.tsv"), "!script cyrillic\n!version test-2\nа\tA\nб\tB\n").unwrap();
    let out = bin()
        .current_dir(&dir)
        .args(["romanize", "--table", "cy.tsv", "-i", "-"])
        .stdin(Stdio::null())
        .output()
        .unwrap();
    assert!(out.status.success());
    std::fs::write(dir.join("in.txt"), "абв").unwrap();
    assert_eq!(run_ok(&dir, &["romanize", "--table", "cy.tsv", "-i", "in.txt"]), "ABв");
    let env_out =
        bin().current_dir(&dir).env("SCRIPTGAP_TABLES", &dir).args(["romanize", "-i", "in.txt"]).output().unwrap();
    assert_eq!(String::from_utf8(env_out.stdout).unwrap(), "ABв");
    std::fs::write(dir.join("bad.tsv"), "!script cyrillic\nа\tä\n").unwrap();
    assert_eq!(run(&dir, &["romanize", "--table", "bad.tsv", "-i", "in.txt"]).status.code(), Some(2));
}

#[test]
fn evaluate_first_relevant_at_rank_three() {
    let dir = workdir("evaluate-rank3");
    std::fs::write(dir.join("qrels"), "q1 0 d3 1\nq1 0 d9 0\n").unwrap();
    std::fs::write(dir.join("run"), "q1 Q0 d1 1 3.0 t\nq1 Q0 d2 2 2.0 t\nq1 Q0 d3 3 1.0 t\n").unwrap();
    let text = run_ok(&dir, &["evaluate", "--run", "run", "--qrels", "qrels", "--metric", "mrr@10"]);
    assert!(text.starts_with("MRR@10\t0.3333\t"), "{text}");
    let kv = run_ok(
        &dir,
        &[
            "evaluate",
            "--run",
            "run",
            "--qrels",
            "qrels",
            "--metric",
            "mrr@10",
            "--metric",
            "recall@2",
            "--format",
            "kv",
            "--per-query",
        ],
    );
    assert_eq!(kv, "MRR@10\tq1\t0.333333\nMRR@10\tALL\t0.333333\nR@2\tq1\t0.000000\nR@2\tALL\t0.000000\n");
}

#[test]
fn gap_report_on_identical_runs() {
    let dir = workdir("gap-identical");
    std::fs::write(dir.join("qrels"), "q1 0 a 1\nq2 0 b 1\nq3 0 c 1\n").unwrap();
    std::fs::write(dir.join("run"), "q1 Q0 a 1 2 t\nq2 Q0 x 1 2 t\nq2 Q0 b 2 1 t\nq3 Q0 y 1 1 t\n").unwrap();
    let kv = run_ok(
        &dir,
        &["gap-report", "--native", "run", "--translit", "run", "--qrels", "qrels", "--format", "kv", "--m", "2"],
    );
    assert!(kv.contains("MRR@10:relative_drop\tALL\t0.000000\n"), "{kv}");
    assert!(kv.contains("MRR@10:raw_p\tALL\t1.000000\n"), "{kv}");
    assert!(kv.contains("MRR@10:corrected_p\tALL\t1.000000\n"), "{kv}");
    assert!(kv.contains("m\tALL\t2\n"));
    let text = run_ok(&dir, &["gap-report", "--native", "run", "--translit", "run", "--qrels", "qrels"]);
    assert!(text.contains("paired t-test"));
}

#[test]
fn exit_statuses() {
    let dir = workdir("exit-statuses");
    assert_eq!(run(&dir, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&dir, &["evaluate", "--run", "r"]).status.code(), Some(1));
    assert_eq!(run(&dir, &["evaluate", "--run", "missing", "--qrels", "missing"]).status.code(), Some(2));
    std::fs::write(dir.join("qrels"), "q1 0 a 1\n").unwrap();
    std::fs::write(dir.join("gappy"), "q1 Q0 a 1 2 t\nq1 Q0 b 3 1 t\n").unwrap();
    assert_eq!(run(&dir, &["evaluate", "--run", "gappy", "--qrels", "qrels", "--strict"]).status.code(), Some(2));
    assert_eq!(run(&dir, &["evaluate", "--run", "gappy", "--qrels", "qrels"]).status.code(), Some(0));
    assert_eq!(
        run(&dir, &["evaluate", "--run", "gappy", "--qrels", "qrels", "--metric", "map@5"]).status.code(),
        Some(1)
    );
    // One query is too few for a paired test.
    assert_eq!(
        run(&dir, &["gap-report", "--native", "gappy", "--translit", "gappy", "--qrels", "qrels"]).status.code(),
        Some(3)
    );
    assert_eq!(run(&dir, &["mix-train", "--queries", "q", "--config", "75", "-o", "x"]).status.code(), Some(1));
    assert!(run(&dir, &["--help"]).status.success());
}

#[test]
fn synthetic_pipeline_shows_the_lexical_gap() {
    let dir = workdir("pipeline");
    run_ok(&dir, &["gen-synth", "--out-dir", "syn", "--n-docs", "150", "--n-queries", "50", "--n-eval", "50"]);
    run_ok(&dir, &["index", "--docs", "syn/docs.tsv", "-o", "idx"]);
    run_ok(&dir, &["romanize", "--queries", "-i", "syn/eval_queries.tsv", "-o", "rom.tsv"]);
    run_ok(
        &dir,
        &[
            "--threads",
            "2",
            "search",
            "--index",
            "idx",
            "--queries",
            "syn/eval_queries.tsv",
            "-k",
            "10",
            "-o",
            "nat.run",
        ],
    );
    run_ok(&dir, &["search", "--index", "idx", "--queries", "rom.tsv", "-k", "10", "-o", "rom.run"]);
    let kv = run_ok(
        &dir,
        &[
            "gap-report",
            "--native",
            "nat.run",
            "--translit",
            "rom.run",
            "--qrels",
            "syn/eval_qrels.txt",
            "--format",
            "kv",
        ],
    );
    assert!(kv.contains("MRR@10:translit\tALL\t0.000000\n"), "{kv}");
    assert!(kv.contains("MRR@10:relative_drop\tALL\t1.000000\n"), "{kv}");
    let overlap = run_ok(&dir, &["overlap", "--a", "nat.run", "--b", "rom.run", "--k", "10"]);
    assert!(overlap.contains("overlap@10<=3\tALL\t"), "{overlap}");
    let dump = run_ok(&dir, &["dump-index", "--index", "idx"]);
    assert!(!dump.is_empty());
}

#[test]
fn toy_encoder_train_and_rank() {
    let dir = workdir("toy");
    run_ok(&dir, &["gen-synth", "--out-dir", "syn", "--n-docs", "100", "--n-queries", "60", "--n-eval", "20"]);
    let train = [
        "train-toy",
        "--docs",
        "syn/docs.tsv",
        "--queries",
        "syn/queries.tsv",
        "--triples",
        "syn/triples.tsv",
        "--config",
        "50",
        "--seed",
        "4",
        "--epochs",
        "3",
        "--hash-dim",
        "4096",
        "--emb-dim",
        "16",
        "--grad-check",
        "-o",
        "model.bin",
        "--log",
        "loss.tsv",
    ];
    run_ok(&dir, &train);
    let log = std::fs::read_to_string(dir.join("loss.tsv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert!(log.lines().all(|l| l.split('\t').count() == 2));
    let model = std::fs::read(dir.join("model.bin")).unwrap();
    assert_eq!(&model[..4], b"SGTE");
    run_ok(&dir, &train);
    assert_eq!(std::fs::read(dir.join("model.bin")).unwrap(), model, "training is not reproducible");
    let ranked = run_ok(
        &dir,
        &["rank-toy", "--model", "model.bin", "--docs", "syn/docs.tsv", "--queries", "syn/eval_queries.tsv", "-k", "5"],
    );
    assert_eq!(ranked.lines().count(), 100);
    std::fs::write(dir.join("broken.bin"), &model[..10]).unwrap();
    assert_eq!(
        run(
            &dir,
            &["rank-toy", "--model", "broken.bin", "--docs", "syn/docs.tsv", "--queries", "syn/eval_queries.tsv"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn mix_train_writes_sidecar() {
    let dir = workdir("mix");
    let queries: String = (0..100).map(|i| format!("q{i}\tзапрос {i}\n")).collect();
    std::fs::write(dir.join("q.tsv"), queries).unwrap();
    run_ok(
        &dir,
        &["mix-train", "--queries", "q.tsv", "--config", "50", "--seed", "3", "--exact-half", "-o", "mixed.tsv"],
    );
    let mixed = std::fs::read_to_string(dir.join("mixed.tsv")).unwrap();
    assert_eq!(mixed.lines().filter(|l| l.contains("zapros")).count(), 50);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("mixed.tsv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"], "50");
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["exact_half"], true);
    assert_eq!(meta["romanized_qids"], 50);
    assert_eq!(meta["total_qids"], 100);
    assert!(meta["tables"].as_array().unwrap().iter().any(|t| t[0] == "cyrillic"));
    assert!(meta["toolkit_version"].is_string());
}

#[test]
fn manifest_reproduces_outputs() {
    let dir = workdir("manifest");
    run_ok(
        &dir,
        &["gen-synth", "--out-dir", "syn", "--n-docs", "40", "--n-queries", "20", "--n-eval", "5", "--seed", "9"],
    );
    run_ok(
        &dir,
        &["--manifest", "m.json", "mix-train", "--queries", "syn/queries.tsv", "--seed", "12", "-o", "mixed.tsv"],
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("m.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "mix-train");
    assert_eq!(manifest["seed"], 12);
    assert_eq!(manifest["inputs"][0]["path"], "syn/queries.tsv");
    let first = std::fs::read(dir.join("mixed.tsv")).unwrap();
    std::fs::remove_file(dir.join("mixed.tsv")).unwrap();

    let argv: Vec<String> =
        manifest["argv"].as_array().unwrap()[1..].iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let args: Vec<&str> = argv.iter().map(String::as_str).collect();
    run_ok(&dir, &args);
    assert_eq!(std::fs::read(dir.join("mixed.tsv")).unwrap(), first);
    let again: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("m.json")).unwrap()).unwrap();
    assert_eq!(again["outputs"], manifest["outputs"]);
}
