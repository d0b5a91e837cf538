use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rand::{rngs::StdRng, Rng, SeedableRng};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_efgram"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn lookup(index: &Path, grams: &str) -> String {
    let mut child = bin()
        .args(["lookup", "--index", index.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let input = grams.to_string();
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()).unwrap());
    let out = child.wait_with_output().unwrap();
    writer.join().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

/// Skewed text with repeated phrases.
fn corpus_lines(lines: usize, v: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..lines)
        .map(|_| {
            let len = rng.random_range(2..14);
            let mut w = rng.random_range(0..v);
            (0..len)
                .map(|_| {
                    let cur = w;
                    let r: f64 = rng.random();
                    w = if r < 0.15 {
                        let u: f64 = rng.random();
                        (u * u * u * v as f64) as usize
                    } else {
                        (cur * 7 + 3 + (r * r * r * 4.0) as usize) % v
                    };
                    format!("w{cur}")
                })
                .collect()
        })
        .collect()
}

fn write_lines(path: &Path, lines: &[Vec<String>]) {
    let mut f = std::fs::File::create(path).unwrap();
    for l in lines {
        writeln!(f, "{}", l.join(" ")).unwrap();
    }
}

fn count_files(dir: &Path, lines: &[Vec<String>], order: usize) -> Vec<PathBuf> {
    (1..=order)
        .map(|n| {
            let mut counts: BTreeMap<String, u64> = BTreeMap::new();
            for l in lines {
                for g in l.windows(n) {
                    *counts.entry(g.join(" ")).or_default() += 1;
                }
            }
            let path = dir.join(format!("{n}-grams.tsv"));
            let mut f = std::fs::File::create(&path).unwrap();
            // reverse order so the builder has to sort
            for (g, c) in counts.iter().rev() {
                writeln!(f, "{g}\t{c}").unwrap();
            }
            path
        })
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn estimate_then_perplexity_and_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let lines = corpus_lines(800, 600, 1);
    let corpus = dir.path().join("corpus.txt");
    write_lines(&corpus, &lines);
    let model = dir.path().join("m.trie");
    let arpa = dir.path().join("m.arpa");
    let report = ok(&[
        "estimate", "--order", "3", "--ram", "64K", "--tmp", p(dir.path()), "--threads", "2", "--remap", "1",
        "--arpa", p(&arpa), p(&corpus), "-o", p(&model),
    ]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(report["flushes"].as_u64().unwrap() >= 1);
    assert!(std::fs::read_to_string(&arpa).unwrap().starts_with("\n\\data\\\nngram 1="));

    let ppl: serde_json::Value = serde_json::from_str(&ok(&["perplexity", "--index", p(&model), "--input", p(&corpus)])).unwrap();
    let value = ppl["perplexity"].as_f64().unwrap();
    assert!(value.is_finite() && value > 1.0, "{ppl}");
    assert_eq!(ppl["OOV"], 0);
    assert_eq!(ppl["M"].as_u64().unwrap(), lines.iter().map(|l| l.len() as u64).sum::<u64>());

    let trigrams: String = lines.iter().flat_map(|l| l.windows(3).map(|g| g.join(" ") + "\n")).collect();
    let out = lookup(&model, &trigrams);
    assert_eq!(out.lines().count(), trigrams.lines().count());
    for line in out.lines() {
        let prob: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!(prob > 0.0 && prob <= 1.0, "{line}");
    }
    assert!(lookup(&model, "nope w1 w2\n").ends_with("\t-\n"));
}

#[test]
fn remapped_trie_answers_the_same() {
    let dir = tempfile::tempdir().unwrap();
    let lines = corpus_lines(2000, 300, 2);
    let files = count_files(dir.path(), &lines, 4);
    let files: Vec<&str> = files.iter().map(|f| p(f)).collect();
    let plain = dir.path().join("k0.trie");
    let remapped = dir.path().join("k2.trie");
    let hash = dir.path().join("h.mph");
    let mut args = vec!["build-trie", "--remap", "0", "-o", p(&plain)];
    args.extend(&files);
    ok(&args);
    args[2] = "2";
    args[4] = p(&remapped);
    ok(&args);
    let mut args = vec!["build-hash", "-o", p(&hash)];
    args.extend(&files);
    ok(&args);

    let mut queries = String::new();
    for f in &files {
        for line in std::fs::read_to_string(f).unwrap().lines() {
            queries += line.split('\t').next().unwrap();
            queries.push('\n');
        }
    }
    queries += "w1 w1 w1 w1\nw0 zz\n";
    let a = lookup(&plain, &queries);
    assert_eq!(a, lookup(&remapped, &queries));
    assert_eq!(a, lookup(&hash, &queries));
    assert!(a.ends_with("w0 zz\t-\n"));

    let stats = |path: &Path| -> serde_json::Value { serde_json::from_str(&ok(&["stats", "--index", p(path)])).unwrap() };
    let (s0, s2) = (stats(&plain), stats(&remapped));
    assert!(s2["total_id_bits"].as_u64().unwrap() < s0["total_id_bits"].as_u64().unwrap(), "{s0} {s2}");
    assert_eq!(stats(&hash)["kind"], "hash");
}

#[test]
fn count_writes_context_sorted_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    write_lines(&corpus, &corpus_lines(300, 100, 3));
    let out = dir.path().join("blocks");
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["count", "--order", "3", "--ram", "8K", p(&corpus), "-o", p(&out)])).unwrap();
    let files = report["files"].as_array().unwrap();
    assert_eq!(files.len() as u64, report["flushes"].as_u64().unwrap());
    assert!(files.len() > 1);
    assert!(out.join("vocab.bin").exists());
}

#[test]
fn tmp_dir_falls_back_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    write_lines(&corpus, &corpus_lines(400, 300, 4));
    let tmp = dir.path().join("scratch");
    std::fs::create_dir(&tmp).unwrap();
    let out = bin()
        .args(["estimate", "--order", "2", p(&corpus), "-o", p(&dir.path().join("m.trie"))])
        .env("NGRAM_TMPDIR", &tmp)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(&tmp).unwrap().count(), 0);
    // a regular file as the tmp dir makes the run fail
    let out = bin()
        .args(["estimate", "--order", "2", p(&corpus), "-o", p(&dir.path().join("m2.trie"))])
        .env("NGRAM_TMPDIR", &corpus)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    write_lines(&corpus, &corpus_lines(50, 20, 5));
    let m = dir.path().join("m.trie");
    for args in [
        vec!["frobnicate"],
        vec!["estimate", "--order", "9", p(&corpus), "-o", p(&m)],
        vec!["estimate", "--order", "3", "--remap", "2", p(&corpus), "-o", p(&m)],
        vec!["estimate", "--quant-bits", "40", p(&corpus), "-o", p(&m)],
        vec!["estimate", "--ram", "lots", p(&corpus), "-o", p(&m)],
        vec!["estimate", "--order", "1", p(&corpus), "-o", p(&m)],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    let missing = dir.path().join("missing.txt");
    let out = run(&["estimate", "--order", "2", p(&missing), "-o", p(&m)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
    let out = run(&["perplexity", "--index", p(&corpus), "--input", p(&corpus)]);
    assert_eq!(out.status.code(), Some(1));
}
