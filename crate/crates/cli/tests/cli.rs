//! End-to-end tests of the geckit binary: flags, exit codes, stream
//! behavior and the statistical contracts of each subcommand.

mod common;

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::process::{Command, Stdio};

use common::{
    bin, corpus_lines, run_cli, stdout_of, write_file, write_vocab_lexicon, write_vocab_morph,
};

#[test]
fn generate_is_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_file(dir.path(), "c.txt", &corpus_lines(300, 10));
    let lexicon = write_vocab_lexicon(dir.path());
    let morph = write_vocab_morph(dir.path());
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let output = run_cli(&[
            "generate",
            corpus.to_str().unwrap(),
            "--preset",
            "mate",
            "--lexicon",
            lexicon.to_str().unwrap(),
            "--morph-lexicon",
            morph.to_str().unwrap(),
            "--seed",
            "5",
        ]);
        outputs.push(stdout_of(&output));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].lines().count(), 300);
}

#[test]
fn aspell_preset_never_draws_morph_substitutions() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_file(dir.path(), "c.txt", &corpus_lines(2_000, 10));
    let lexicon = write_vocab_lexicon(dir.path());
    let out = dir.path().join("out.tsv");
    let output = run_cli(&[
        "generate",
        corpus.to_str().unwrap(),
        "--preset",
        "aspell",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--log-ops",
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stats = stdout_of(&run_cli(&["stats", out.to_str().unwrap()]));
    let mut fields: HashMap<String, (u64, f64)> = HashMap::new();
    for line in stats.lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        fields.insert(
            format!("{}/{}", cols[0], cols[1]),
            (cols[2].parse().unwrap(), cols[3].parse().unwrap()),
        );
    }
    assert_eq!(fields["token/sub_morph"].0, 0);
    assert!(fields["token/sub_aspell"].0 > 500);
    // aspell row: sub 0.7, ins 0.1, del 0.05, swap 0.1, recase 0.05
    assert!((fields["token/sub_aspell"].1 - 0.7).abs() < 0.03);
    assert!((fields["token/del"].1 - 0.05).abs() < 0.02);
}

#[test]
fn generate_streams_stdin_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = write_vocab_lexicon(dir.path());
    let mut child = Command::new(bin())
        .args([
            "generate",
            "-",
            "--preset",
            "typical",
            "--lexicon",
            lexicon.to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all("Šli bychom tam .\nKočka spí .\n".as_bytes())
        .unwrap();
    let output = child.wait_with_output().unwrap();
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for line in lines {
        let (_, clean) = line.split_once('\t').unwrap();
        assert!(!clean.is_empty());
    }
}

#[test]
fn log_ops_without_out_fails() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_file(dir.path(), "c.txt", "a b\n");
    let lexicon = write_vocab_lexicon(dir.path());
    let output = run_cli(&[
        "generate",
        corpus.to_str().unwrap(),
        "--preset",
        "typical",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--log-ops",
    ]);
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("--log-ops"));
}

#[test]
fn missing_provider_for_preset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_file(dir.path(), "c.txt", "a b\n");
    let output = run_cli(&["generate", corpus.to_str().unwrap(), "--preset", "mate"]);
    assert!(!output.status.success());
}

fn write_mix_fixture(dir: &std::path::Path, sizes: [(&str, usize); 2]) -> std::path::PathBuf {
    let mut manifest = String::new();
    for (id, n) in sizes {
        let lines: String = (0..n).map(|i| format!("věta {id} {i}\n")).collect();
        write_file(dir, &format!("{id}.txt"), &lines);
        manifest.push_str(&format!("{id}\t{id}.txt\n"));
    }
    write_file(dir, "manifest.tsv", &manifest)
}

#[test]
fn mix_factor_zero_balances_equal_domains() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_mix_fixture(dir.path(), [("A", 500), ("B", 500)]);
    let output = stdout_of(&run_cli(&[
        "mix",
        manifest.to_str().unwrap(),
        "--factor",
        "0",
        "--count",
        "10000",
        "--seed",
        "1",
    ]));
    let a = output.lines().filter(|l| l.starts_with("A\t")).count();
    let b = output.lines().filter(|l| l.starts_with("B\t")).count();
    assert_eq!(a + b, 10_000);
    assert!((a as i64 - 5000).abs() <= 300, "A drawn {a} times");
}

#[test]
fn mix_factor_one_matches_size_shares() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_mix_fixture(dir.path(), [("A", 400), ("B", 100)]);
    let output = stdout_of(&run_cli(&[
        "mix",
        manifest.to_str().unwrap(),
        "--factor",
        "1",
        "--count",
        "10000",
        "--seed",
        "2",
    ]));
    let a = output.lines().filter(|l| l.starts_with("A\t")).count() as f64;
    assert!(
        (a / 10_000.0 - 0.8).abs() <= 0.02,
        "A share {}",
        a / 10_000.0
    );
}

#[test]
fn mix_ratio_zero_emits_only_gold_lines() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_mix_fixture(dir.path(), [("A", 50), ("B", 50)]);
    let output = stdout_of(&run_cli(&[
        "mix",
        manifest.to_str().unwrap(),
        "--ratio",
        "0",
        "--count",
        "500",
        "--seed",
        "3",
    ]));
    assert_eq!(output.lines().count(), 500);
    for line in output.lines() {
        assert!(!line.starts_with("syn:"), "synthetic line in ratio-0 mix");
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 3);
        assert_eq!(cols[1], cols[2], "gold line must have noisy == clean");
    }
}

#[test]
fn mix_ratio_two_schedules_two_synthetic_per_gold() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_mix_fixture(dir.path(), [("A", 50), ("B", 50)]);
    let lexicon = write_vocab_lexicon(dir.path());
    let morph = write_vocab_morph(dir.path());
    let output = stdout_of(&run_cli(&[
        "mix",
        manifest.to_str().unwrap(),
        "--ratio",
        "2",
        "--count",
        "999",
        "--seed",
        "4",
        "--preset",
        "mate",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--morph-lexicon",
        morph.to_str().unwrap(),
    ]));
    let lines: Vec<&str> = output.lines().collect();
    assert_eq!(lines.len(), 999);
    for window in lines.chunks(3) {
        let gold = window.iter().filter(|l| !l.starts_with("syn:")).count();
        assert_eq!(gold, 1, "window {window:?}");
    }
}

#[test]
fn mix_is_reproducible_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_mix_fixture(dir.path(), [("A", 100), ("B", 30)]);
    let lexicon = write_vocab_lexicon(dir.path());
    let morph = write_vocab_morph(dir.path());
    let args = [
        "mix",
        manifest.to_str().unwrap(),
        "--ratio",
        "3",
        "--count",
        "400",
        "--seed",
        "11",
        "--preset",
        "mate",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--morph-lexicon",
        morph.to_str().unwrap(),
    ];
    let first = stdout_of(&run_cli(&args));
    let second = stdout_of(&run_cli(&args));
    assert_eq!(first, second);
}

#[test]
fn mix_ratio_above_zero_requires_noise_config() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_mix_fixture(dir.path(), [("A", 10), ("B", 10)]);
    let output = run_cli(&[
        "mix",
        manifest.to_str().unwrap(),
        "--ratio",
        "2",
        "--count",
        "10",
    ]);
    assert!(!output.status.success());
}

fn score_fixture(dir: &std::path::Path) -> (std::path::PathBuf, std::path::PathBuf) {
    // gold: two edits on sentence 1, one on sentence 2, one on 3
    let gold = "S a dog barked loud\n\
                A 0 1|||Det|||The|||REQUIRED|||-NONE-|||0\n\
                A 3 4|||Adv|||loudly|||REQUIRED|||-NONE-|||0\n\
                \n\
                S she like it\n\
                A 1 2|||SVA|||likes|||REQUIRED|||-NONE-|||0\n\
                \n\
                S it is good\n\
                A 2 3|||Adj|||great|||REQUIRED|||-NONE-|||0\n\
                \n";
    // hyp: matches both edits of s1, misses s2's edit, and on s3 makes
    // a different (wrong) edit -> tp=2, fp=1, fn=2
    let hyp = "The dog barked loudly\nshe like it\nit is fine\n";
    (
        write_file(dir, "gold.m2", gold),
        write_file(dir, "hyp.txt", hyp),
    )
}

#[test]
fn score_prints_the_expected_f_half() {
    let dir = tempfile::tempdir().unwrap();
    let (gold, hyp) = score_fixture(dir.path());
    let json_path = dir.path().join("report.json");
    let output = stdout_of(&run_cli(&[
        "score",
        gold.to_str().unwrap(),
        hyp.to_str().unwrap(),
        "--out",
        json_path.to_str().unwrap(),
    ]));
    // tp=2 fp=1 fn=2: P=2/3, R=1/2, F0.5=0.625
    assert!(output.contains("TP: 2  FP: 1  FN: 2"), "{output}");
    assert!(output.contains("0.6250"), "{output}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["overall"]["tp"], 2);
    assert_eq!(report["overall"]["fn"], 2);
    assert!((report["overall"]["f_beta"].as_f64().unwrap() - 0.625).abs() < 1e-12);
}

#[test]
fn score_perfect_and_do_nothing_systems() {
    let dir = tempfile::tempdir().unwrap();
    let (gold, _) = score_fixture(dir.path());
    let perfect = write_file(
        dir.path(),
        "perfect.txt",
        "The dog barked loudly\nshe likes it\nit is great\n",
    );
    let output = stdout_of(&run_cli(&[
        "score",
        gold.to_str().unwrap(),
        perfect.to_str().unwrap(),
    ]));
    assert!(output.contains("F0.5:      1.0000"), "{output}");

    let unchanged = write_file(
        dir.path(),
        "same.txt",
        "a dog barked loud\nshe like it\nit is good\n",
    );
    let output = stdout_of(&run_cli(&[
        "score",
        gold.to_str().unwrap(),
        unchanged.to_str().unwrap(),
    ]));
    assert!(output.contains("Recall:    0.0000"), "{output}");
    assert!(output.contains("F0.5:      0.0000"), "{output}");
}

#[test]
fn score_reports_per_domain_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let (gold, hyp) = score_fixture(dir.path());
    let domains = write_file(dir.path(), "domains.txt", "NF\nSL\nNF\n");
    let json_path = dir.path().join("report.json");
    let output = stdout_of(&run_cli(&[
        "score",
        gold.to_str().unwrap(),
        hyp.to_str().unwrap(),
        "--domains",
        domains.to_str().unwrap(),
        "--out",
        json_path.to_str().unwrap(),
    ]));
    assert!(output.contains("NF"), "{output}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["per_domain"]["NF"]["tp"], 2);
    assert_eq!(report["per_domain"]["NF"]["fp"], 1);
    assert_eq!(report["per_domain"]["SL"]["fn"], 1);
}

#[test]
fn score_ignore_case_flag_relaxes_matching() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_file(
        dir.path(),
        "g.m2",
        "S a dog\nA 0 1|||Det|||The|||REQUIRED|||-NONE-|||0\n\n",
    );
    let hyp = write_file(dir.path(), "h.txt", "the dog\n");
    let strict = stdout_of(&run_cli(&[
        "score",
        gold.to_str().unwrap(),
        hyp.to_str().unwrap(),
    ]));
    assert!(strict.contains("F0.5:      0.0000"), "{strict}");
    let folded = stdout_of(&run_cli(&[
        "score",
        gold.to_str().unwrap(),
        hyp.to_str().unwrap(),
        "--ignore-case",
    ]));
    assert!(folded.contains("F0.5:      1.0000"), "{folded}");
}

#[test]
fn score_count_mismatch_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let (gold, _) = score_fixture(dir.path());
    let short = write_file(dir.path(), "short.txt", "The dog barked loudly\n");
    let output = run_cli(&["score", gold.to_str().unwrap(), short.to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("blocks"));
}

#[test]
fn score_rejects_hypothesis_with_tab() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_file(dir.path(), "g.m2", "S a b\n\n");
    let hyp = write_file(dir.path(), "h.txt", "a\tb\n");
    let output = run_cli(&["score", gold.to_str().unwrap(), hyp.to_str().unwrap()]);
    assert!(!output.status.success());
}

#[test]
fn stats_on_empty_sidecar_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = write_file(dir.path(), "x.tsv", "");
    write_file(dir.path(), "x.tsv.ops", "");
    let output = stdout_of(&run_cli(&["stats", tsv.to_str().unwrap()]));
    let lines: Vec<&str> = output.lines().collect();
    assert_eq!(lines.len(), 11); // 5 char + 6 token ops, all zero
    for line in lines {
        assert!(line.ends_with("\t0\t0.000000"), "{line}");
    }
}

#[test]
fn stats_without_sidecar_fails() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = write_file(dir.path(), "x.tsv", "a\ta\n");
    let output = run_cli(&["stats", tsv.to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("sidecar"));
}

#[test]
fn profile_file_with_zero_rates_keeps_lines_clean() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_file(dir.path(), "c.txt", &corpus_lines(100, 8));
    let profile = write_file(
        dir.path(),
        "p.toml",
        "[char_pass]\nrate_mean = 0.0\nrate_std = 0.0\nop_weights = [1,1,1,1,1]\n\
         [token_pass]\nrate_mean = 0.0\nrate_std = 0.0\nop_weights = [0,0,0,1,1,1]\n",
    );
    let output = stdout_of(&run_cli(&[
        "generate",
        corpus.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
    ]));
    for line in output.lines() {
        let (noisy, clean) = line.split_once('\t').unwrap();
        assert_eq!(noisy, clean);
    }
}
