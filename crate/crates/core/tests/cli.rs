//! End-to-end runs of the `iompp` binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iompp"))
}

fn protocol(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../protocols")
        .join(format!("{name}.txt"))
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn compiled(dir: &tempfile::TempDir, name: &str, extra: &[&str]) -> String {
    let out = dir.path().join(format!("{name}.compiled.txt")).display().to_string();
    let src = protocol(name);
    let mut args = vec!["compile", &src, &out];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn transitions_in(path: &str) -> usize {
    let text = fs::read_to_string(path).unwrap();
    let body = text.split("transitions:\n").nth(1).unwrap();
    body.split("provenance:").next().unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

#[test]
fn compile_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(transitions_in(&compiled(&dir, "detect_one", &[])), 19);
    let dir2 = tempfile::tempdir().unwrap();
    assert_eq!(transitions_in(&compiled(&dir2, "detect_one", &["--use-t6"])), 1);
}

#[test]
fn compile_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "model: pp\nstates: 0 1\ninput:\n  0 => 0\n").unwrap();
    let out = dir.path().join("out.txt");
    let o = run(&["compile", bad.to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn run_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let o = run(&[
        "run",
        &protocol("detect_one"),
        "--input",
        "1,0",
        "--seed",
        "7",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "final: 1,1\noutput: 1\nsteps: 1\n");
    assert_eq!(fs::read_to_string(&trace).unwrap(), "seed: 7\nstart: 1,0\n1 2 0 -> 1,1\n");

    let o = run(&["run", &protocol("detect_one"), "--input", "0,0", "--trace", trace.to_str().unwrap()]);
    assert_eq!(stdout(&o), "final: 0,0\noutput: 0\nsteps: 0\n");
    assert_eq!(fs::read_to_string(&trace).unwrap(), "seed: 0\nstart: 0,0\n");
    assert_eq!(run(&["run", &protocol("detect_one"), "--input", "5,0"]).status.code(), Some(1));
}

#[test]
fn run_compiled_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let target = compiled(&dir, "threshold2", &[]);
    let o = run(&["run", &target, "--input", "1,1,0", "--seed", "3", "--max-steps", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("output: 1\n"), "{}", stdout(&o));
}

#[test]
fn predicate_tables() {
    let o = run(&["predicate", &protocol("threshold2"), "--max-n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0,0 -> 0\n0,1 -> 0\n1,0 -> 0\n1,1 -> 1\n");
    let o = run(&["predicate", &protocol("detect_one"), "--max-n", "3"]);
    assert_eq!(stdout(&o).lines().count(), 12);
    assert!(!stdout(&o).contains("NWS"));
}

#[test]
fn predicate_flags_conflicting_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("swap.txt");
    fs::write(
        &path,
        "model: pp\nstates: a b\nalphabet: 0 1\ninput:\n  0 -> a\n  1 -> b\noutput:\n  a -> 0\n  b -> 1\ntransitions:\n  a b -> b a\n",
    )
    .unwrap();
    let o = run(&["predicate", path.to_str().unwrap(), "--max-n", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("0,1 -> NWS"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let target = compiled(&dir, "detect_one", &[]);
    let src = protocol("detect_one");
    let o = run(&["verify", "--source", &src, "--target", &target, "--max-n", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("verdict: pass").count(), 6);

    // drop every t5 line from the compiled file
    let text = fs::read_to_string(&target).unwrap();
    let (head, prov) = text.split_once("provenance:\n").unwrap();
    let t5: Vec<usize> = prov
        .lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            let idx: usize = it.next()?.parse().ok()?;
            (it.next()? == "t5").then_some(idx)
        })
        .collect();
    let (pre, trans) = head.split_once("transitions:\n").unwrap();
    let kept: Vec<&str> =
        trans.lines().enumerate().filter(|(i, _)| !t5.contains(i)).map(|(_, l)| l).collect();
    let mut renumbered = String::new();
    let mut k = 0;
    for l in prov.lines() {
        let mut it = l.split_whitespace();
        let _ = it.next();
        let fam = it.next().unwrap();
        if fam != "t5" {
            renumbered.push_str(&format!("  {k} {fam} {}\n", it.next().unwrap()));
            k += 1;
        }
    }
    let tampered = format!("{pre}transitions:\n{}\nprovenance:\n{renumbered}", kept.join("\n"));
    let tampered_path = dir.path().join("tampered.txt");
    fs::write(&tampered_path, tampered).unwrap();
    let o = run(&["verify", "--source", &src, "--target", tampered_path.to_str().unwrap(), "--max-n", "2"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("witness:"));

    let o =
        run(&["verify", "--source", &src, "--target", &target, "--max-n", "100000", "--node-limit", "50"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("verdict: inconclusive"));

    let o = run(&["verify", "--source", &src, "--target", &target, "--checks", "io,bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn translate_outputs() {
    let o = run(&["translate", "--protocol", &protocol("detect_one"), "--config", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "config:\n  U:0,eps\n  eps,U:1\n");

    let o = run(&["translate", "--protocol", &protocol("detect_one_once"), "--config", "1,used;fresh,0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "config:\n  U:1,eps|used\n  eps|fresh,U:0\n");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.txt");
    fs::write(&file, "# three agents\nconfig:\n  1, 0, 0\n").unwrap();
    let o = run(&["translate", "--protocol", &protocol("detect_one"), "--config", file.to_str().unwrap()]);
    assert_eq!(stdout(&o), "config:\n  U:1,eps,eps\n  eps,U:0,eps\n  eps,eps,U:0\n");

    let o = run(&["translate", "--protocol", &protocol("detect_one"), "--config", "0,7"]);
    assert_eq!(o.status.code(), Some(1));
}
