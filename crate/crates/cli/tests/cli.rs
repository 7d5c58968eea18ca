use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

const C1: &str = r#"{"agents":["a","b"],"observations":{"a":["oa"],"b":["ob"]},"results":["0","1"],"compose":"max"}"#;
const C2: &str = r#"{"agents":["a","b"],"observations":{"a":["oa"],"b":["ob1","ob2"]},"results":["0","1"],"compose":"max"}"#;

fn file_with(content: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

fn lck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lck")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn status(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn prove_kripke_axiom() {
    let c2 = file_with(C2);
    let out = lck(&["prove", "--config", c2.path().to_str().unwrap(), "K{a}(p->q) -> (K{a}p -> K{a}q)"]);
    assert_eq!(status(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("provable\n[=>->]"), "{text}");
}

#[test]
fn prove_json_is_deterministic() {
    let c2 = file_with(C2);
    let args = ["prove", "--config", c2.path().to_str().unwrap(), "--format", "json", "K{a} p -> K{a,b} p"];
    let (a, b) = (lck(&args), lck(&args));
    assert_eq!(status(&a), 0);
    let strip = |o: &Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["stats"]["elapsed_ms"] = serde_json::Value::Null;
        v
    };
    let v = strip(&a);
    assert_eq!(v, strip(&b));
    assert_eq!(v["provable"], true);
    assert_eq!(v["tree"]["rule"], "=>->");
    for key in ["nodes", "depth", "table_lk_size", "table_rk_chains"] {
        assert!(v["stats"][key].is_u64(), "{key}");
    }
}

#[test]
fn unprovable_exits_one() {
    let c2 = file_with(C2);
    let out = lck(&["prove", "--config", c2.path().to_str().unwrap(), "p -> K{a} p"]);
    assert_eq!(status(&out), 1);
    assert!(stdout(&out).contains("[Open]"));
}

#[test]
fn node_cap_exits_two() {
    let c2 = file_with(C2);
    let out = lck(&["prove", "--config", c2.path().to_str().unwrap(), "--max-nodes", "2", "K{a} p -> p"]);
    assert_eq!(status(&out), 2);
    assert!(stdout(&out).starts_with("inconclusive"));
}

#[test]
fn validity_with_witness() {
    let c2 = file_with(C2);
    let out = lck(&["validity", "--config", c2.path().to_str().unwrap(), "--witness", "--format", "json", "p -> K{a}p"]);
    assert_eq!(status(&out), 1);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(v["countermodel"]["states"].as_array().unwrap().len(), 2);

    // The dumped countermodel is itself a valid model.
    let model = file_with(&v["countermodel"].to_string());
    let check = lck(&["check-model", "--config", c2.path().to_str().unwrap(), model.path().to_str().unwrap()]);
    assert_eq!(status(&check), 0, "{}", stdout(&check));
}

#[test]
fn validity_of_sequent() {
    let c2 = file_with(C2);
    let out = lck(&["validity", "--config", c2.path().to_str().unwrap(), "s: K{a} p, s ~{a} t |- t: p"]);
    assert_eq!(status(&out), 0);
    assert_eq!(stdout(&out), "valid\n");
}

#[test]
fn prove_and_validity_agree() {
    let c1 = file_with(C1);
    let c2 = file_with(C2);
    let cases = [
        "p | ~p",
        "K{a} p -> p",
        "p -> K{a} p",
        "obs{a}(oa)^1 -> K{a} obs{a}(oa)^1",
        "~K{b} p -> K{b} ~K{b} p",
        "K{} p -> K{a} p",
        "obs{a}(oa)^0",
    ];
    for cfg in [&c1, &c2] {
        let path = cfg.path().to_str().unwrap();
        for case in cases {
            let p = status(&lck(&["prove", "--config", path, case]));
            let v = status(&lck(&["validity", "--config", path, case]));
            assert_eq!(p, v, "{case}");
        }
    }
}

#[test]
fn corpus_passes() {
    let c2 = file_with(C2);
    let out = lck(&["corpus", "--config", c2.path().to_str().unwrap()]);
    assert_eq!(status(&out), 0);
    assert!(stdout(&out).ends_with("14/14 schemata pass\n"));
}

#[test]
fn input_from_file() {
    let c2 = file_with(C2);
    let input = file_with("K{a} p -> K{a} K{a} p\n");
    let out = lck(&["prove", "--config", c2.path().to_str().unwrap(), "--file", input.path().to_str().unwrap()]);
    assert_eq!(status(&out), 0);
}

#[test]
fn errors_exit_two() {
    let c2 = file_with(C2);
    let path = c2.path().to_str().unwrap();
    assert_eq!(status(&lck(&["prove", "--config", path, "p &"])), 2);
    assert_eq!(status(&lck(&["prove", "--config", path, "K{z} p"])), 2);
    assert_eq!(status(&lck(&["prove", "p"])), 2);
    let bad = file_with(r#"{"agents":[],"observations":{},"results":["0"],"compose":"max"}"#);
    assert_eq!(status(&lck(&["prove", "--config", bad.path().to_str().unwrap(), "p"])), 2);
}

#[test]
fn check_model_rejects_duplicate_states() {
    let c1 = file_with(C1);
    let model = file_with(
        r#"{"states":[{"name":"x","outcomes":{"oa,ob":"0"}},{"name":"y","outcomes":{"oa,ob":"0"}}],"valuation":{}}"#,
    );
    let out = lck(&["check-model", "--config", c1.path().to_str().unwrap(), model.path().to_str().unwrap()]);
    assert_eq!(status(&out), 1);
}
