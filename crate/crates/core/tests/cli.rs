mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use common::{fixture, fixture_dir};
use ucxn::parse_document;

fn ucxn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucxn")).args(args).output().unwrap()
}

fn ucxn_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ucxn"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn mini_en() -> String {
    path(&fixture_dir().join("mini_en.conllu")).to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn annotate_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.conllu");
    let o = ucxn(&["annotate", "--pack", "en", &mini_en(), "-o", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let doc = parse_document(&text).unwrap();
    let pencil = doc.sentences.iter().find(|s| s.sent_id() == Some("en-1")).unwrap();
    assert_eq!(pencil.word(2).unwrap().misc.get("Cxn"), Some("Interrogative-Polar-Direct"));

    let o = ucxn(&["stats", path(&out)]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "NPN\t2"), "{}", stdout(&o));

    let o = ucxn(&["stats", "--format", "jsonl", path(&out)]);
    assert!(stdout(&o).contains("{\"construction\":\"NPN\",\"count\":2}"));
}

#[test]
fn pipe_equals_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.conllu");
    ucxn(&["annotate", "--pack", "en", &mini_en(), "-o", path(&out)]);
    let two_step = ucxn(&["stats", path(&out)]);

    let piped = ucxn_stdin(&["annotate", "--pack", "en"], fixture("mini_en.conllu").as_bytes());
    assert!(piped.status.success());
    assert_eq!(piped.stdout, fs::read(&out).unwrap());
    let stats = ucxn_stdin(&["stats", "-"], &piped.stdout);
    assert_eq!(stats.stdout, two_step.stdout);
}

#[test]
fn parallel_output_equals_sequential() {
    let seq = ucxn(&["annotate", "--pack", "en", &mini_en()]);
    let par = ucxn(&["--jobs", "4", "annotate", "--pack", "en", &mini_en()]);
    assert_eq!(seq.stdout, par.stdout);
}

#[test]
fn input_untouched_unless_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("copy.conllu");
    let original = fixture("mini_en.conllu");
    fs::write(&copy, &original).unwrap();

    ucxn(&["annotate", "--pack", "en", path(&copy)]);
    assert_eq!(fs::read_to_string(&copy).unwrap(), original);

    let o = ucxn(&["annotate", "--pack", "en", "--in-place", path(&copy)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let annotated = fs::read_to_string(&copy).unwrap();
    assert!(annotated.contains("Cxn=NPN"));

    let o = ucxn(&["strip", "--in-place", path(&copy)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&copy).unwrap(), original);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn validate_exit_codes() {
    let broken = path(&fixture_dir().join("broken.conllu")).to_string();
    let o = ucxn(&["validate", &broken]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{}", err);
    assert!(err.contains("bad-1") && err.contains("head 7 out of range"));

    let o = ucxn(&["validate", &mini_en()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stderr.is_empty());

    assert_eq!(ucxn(&["validate", "/nonexistent/file.conllu"]).status.code(), Some(2));
}

#[test]
fn strict_and_lenient() {
    let broken = path(&fixture_dir().join("broken.conllu")).to_string();
    let o = ucxn(&["annotate", "--pack", "en", &broken]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));

    let o = ucxn(&["--lenient", "annotate", "--pack", "en", &broken]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fixture("broken.conllu"));
    assert!(stderr(&o).contains("1 sentence(s)"));
}

#[test]
fn match_rows() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("npn.cxn");
    fs::write(&q, ucxn::querypack::pack_source("en").unwrap()).unwrap();
    let o = ucxn(&["match", path(&q), &mini_en()]);
    assert!(o.status.success());
    let rows = stdout(&o);
    assert!(rows.lines().any(|l| l == "en-9\tNPN\tN1=3 P=4 N2=5"), "{}", rows);
    assert!(rows.lines().any(|l| l == "en-10\tNPN\tN1=3 P=4 N2=5"));

    let o = ucxn(&["match", "--json", path(&q), &mini_en()]);
    let first = stdout(&o).lines().next().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["sentence"], "en-1");
    assert_eq!(v["query"], "Interrogative-Polar-Direct");
    assert_eq!(v["nodes"]["V"], 2);
}

#[test]
fn usage_and_query_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cxn");
    fs::write(&bad, "cxn X {\n  pattern { A[upos=; }\n}\n").unwrap();
    let o = ucxn(&["match", path(&bad), &mini_en()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("2:"), "{}", stderr(&o));

    assert_eq!(ucxn(&["annotate", "--pack", "xx", &mini_en()]).status.code(), Some(2));
    assert!(stderr(&ucxn(&["annotate", "--pack", "xx", &mini_en()])).contains("unknown pack"));
    assert_eq!(ucxn(&["annotate", &mini_en()]).status.code(), Some(2));
    assert_eq!(ucxn(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ucxn(&["stats", "--format", "xml", &mini_en()]).status.code(), Some(2));
    assert_eq!(ucxn(&["--help"]).status.code(), Some(0));
}

#[test]
fn pack_file_override() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("mine.cxn");
    fs::write(&q, "cxn Mine { meta { head=V; } pattern { V[lemma=stand]; } }\n").unwrap();
    let o = ucxn(&["annotate", "--pack", path(&q), &mini_en()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("Cxn=").count(), 1);
    assert!(text.contains("\tCxn=Mine\n"));
}

#[test]
fn wh_report_rows() {
    let annotated = ucxn(&["annotate", "--pack", "en", &mini_en()]);
    let o = ucxn_stdin(&["wh-report"], &annotated.stdout);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().any(|l| l == "advmod\tinterrogative\t2\t0"), "{}", text);

    let o = ucxn_stdin(&["wh-report", "--baseline-upos", "PRON,DET"], &annotated.stdout);
    assert!(stdout(&o).lines().any(|l| l.starts_with("det\tnon-interrogative\t4")));
}

#[test]
fn packs_listing() {
    let o = ucxn(&["packs"]);
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "es\tExistential-Haber"));
    assert!(text.lines().any(|l| l == "cop\t(absent)"));
}
