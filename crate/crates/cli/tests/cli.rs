use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use seqlab::{conll, modelfile};
use seqlab_core::TagSet;

struct Dir(PathBuf);

impl Dir {
    fn new(name: &str) -> Self {
        let d = std::env::temp_dir().join(format!("seqlab-cli-{}-{name}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        std::fs::create_dir_all(&d).unwrap();
        Dir(d)
    }

    fn p(&self, name: &str) -> String {
        self.0.join(name).display().to_string()
    }

    fn read(&self, name: &str) -> Vec<u8> {
        std::fs::read(self.0.join(name)).unwrap()
    }
}

impl Drop for Dir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn seqlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqlab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = seqlab(args);
    assert!(
        out.status.success(),
        "seqlab {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails(args: &[&str]) -> String {
    let out = seqlab(args);
    assert!(!out.status.success(), "seqlab {} should fail", args.join(" "));
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// A small corpus with weak labels.
fn corpus(name: &str) -> Dir {
    let d = Dir::new(name);
    std::fs::write(
        d.0.join("small.spec"),
        "strong_train = 150\nstrong_dev = 80\nstrong_test = 80\nweak_pool = 600\n",
    )
    .unwrap();
    ok(&[
        "--seed",
        "4",
        "synth",
        "--spec",
        &d.p("small.spec"),
        "--out-dir",
        &d.p(""),
    ]);
    ok(&[
        "weaklabel",
        "--gazetteer",
        &d.p("gazetteer.tsv"),
        "--input",
        &d.p("pool.conll"),
        "--out",
        &d.p("weak.conll"),
        "--report",
        &d.p("weak.json"),
    ]);
    d
}

const FAST: [&str; 8] = [
    "--set",
    "epochs=2",
    "--set",
    "init_epochs=2",
    "--set",
    "finetune_epochs=2",
    "--set",
    "hash_bits=14",
];

fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    FAST.iter().copied().chain(args.iter().copied()).collect()
}

#[test]
fn eval_of_gold_against_itself_is_perfect() {
    let d = corpus("eval");
    ok(&[
        "eval",
        "--pred",
        &d.p("test.conll"),
        "--gold",
        &d.p("test.conll"),
        "--out",
        &d.p("m.json"),
    ]);
    let m = json(&d.p("m.json"));
    assert_eq!(m["span_f1"], 1.0);
    assert_eq!(m["token_acc"], 1.0);
    let q = json(&d.p("weak.json"));
    assert!(q["precision"].as_f64().unwrap() > 0.5);
}

#[test]
fn pipeline_reports_every_stage() {
    let d = corpus("pipeline");
    let base = [
        "--seed",
        "1",
        "pipeline",
        "--train",
        &d.p("train.conll"),
        "--dev",
        &d.p("dev.conll"),
        "--weak",
        &d.p("weak.conll"),
        "--out",
        &d.p("m.model"),
        "--report",
    ];
    for (rounds, stages) in [("1", 5), ("2", 9)] {
        let report = d.p(&format!("r{rounds}.json"));
        let mut args = with_fast(&base);
        args.extend([report.as_str(), "--rounds", rounds]);
        ok(&args);
        let r = json(&report);
        let names: Vec<&str> = r["stages"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["name"].as_str().unwrap())
            .collect();
        assert_eq!(names.len(), stages, "{names:?}");
        assert_eq!(
            names[..5],
            ["init-train", "complete", "calibrate", "noise-aware", "finetune"]
        );
    }
    let (_, prov) = modelfile::load(Path::new(&d.p("m.model"))).unwrap();
    assert_eq!(prov.command, "pipeline");
    assert_eq!(prov.seed, 1);
}

/// Running the stages one command at a time gives the pipeline's model.
#[test]
fn stepwise_commands_match_pipeline() {
    let d = corpus("stepwise");
    let s = ["--seed", "6"];
    let run = |args: &[&str]| ok(&with_fast(&s.iter().chain(args).copied().collect::<Vec<_>>()));
    run(&[
        "train",
        "--init",
        "--train",
        &d.p("train.conll"),
        "--out",
        &d.p("init.model"),
    ]);
    run(&[
        "complete",
        "--model",
        &d.p("init.model"),
        "--weak",
        &d.p("weak.conll"),
        "--out",
        &d.p("corr.conll"),
        "--report",
        &d.p("comp.json"),
    ]);
    run(&[
        "calibrate",
        "--model",
        &d.p("init.model"),
        "--dev",
        &d.p("dev.conll"),
        "--out",
        &d.p("cal.json"),
    ]);
    run(&[
        "train-na",
        "--model",
        &d.p("init.model"),
        "--strong",
        &d.p("train.conll"),
        "--weak",
        &d.p("weak.conll"),
        "--corrected",
        &d.p("corr.conll"),
        "--calibration",
        &d.p("cal.json"),
        "--out",
        &d.p("na.model"),
    ]);
    run(&[
        "finetune",
        "--model",
        &d.p("na.model"),
        "--strong",
        &d.p("train.conll"),
        "--out",
        &d.p("ft.model"),
    ]);
    run(&[
        "pipeline",
        "--train",
        &d.p("train.conll"),
        "--dev",
        &d.p("dev.conll"),
        "--weak",
        &d.p("weak.conll"),
        "--out",
        &d.p("pipe.model"),
        "--report",
        &d.p("pipe.json"),
    ]);
    let (a, _) = modelfile::load(Path::new(&d.p("ft.model"))).unwrap();
    let (b, _) = modelfile::load(Path::new(&d.p("pipe.model"))).unwrap();
    assert_eq!(a, b);
    let comp = json(&d.p("comp.json"));
    assert!(comp["sentences"].as_u64().unwrap() > 0);
    assert!(comp["mismatched"].is_array());
}

#[test]
fn baselines_write_models() {
    let d = corpus("baselines");
    let (train, weak, pseudo) = (d.p("train.conll"), d.p("weak.conll"), d.p("pseudo.conll"));
    for mode in ["wsl", "partial", "sst"] {
        let out = d.p(&format!("{mode}.model"));
        let mut args = with_fast(&[
            "baseline", "--mode", mode, "--train", &train, "--weak", &weak, "--out", &out,
        ]);
        if mode == "sst" {
            args.extend(["--pseudo-out", pseudo.as_str()]);
        }
        ok(&args);
        assert!(modelfile::load(Path::new(&out)).is_ok());
    }
    let pseudo = conll::parse(&String::from_utf8(d.read("pseudo.conll")).unwrap()).unwrap();
    let weak = conll::parse(&String::from_utf8(d.read("weak.conll")).unwrap()).unwrap();
    assert_eq!(pseudo.len(), weak.len());
    let e = fails(&[
        "baseline",
        "--mode",
        "weighted",
        "--train",
        &d.p("train.conll"),
        "--weak",
        &d.p("weak.conll"),
        "--out",
        &d.p("x.model"),
    ]);
    assert!(e.contains("--gamma"), "{e}");
    let e = fails(&[
        "baseline",
        "--mode",
        "wsl",
        "--gamma",
        "0.5",
        "--train",
        &d.p("train.conll"),
        "--weak",
        &d.p("weak.conll"),
        "--out",
        &d.p("x.model"),
    ]);
    assert!(e.contains("--gamma"), "{e}");
}

#[test]
fn stats_counts_spans_per_source() {
    let d = corpus("stats");
    let gold = format!("gold={}", d.p("pool.conll"));
    let weak = format!("weak={}", d.p("weak.conll"));
    let out = ok(&["stats", "--source", &gold, "--source", &weak]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["source"], "gold");
    assert!(rows[0]["total_spans"].as_u64().unwrap() > rows[1]["total_spans"].as_u64().unwrap());
}

#[test]
fn errors_exit_non_zero_with_context() {
    let d = Dir::new("errors");
    let e = fails(&["eval", "--pred", &d.p("missing.conll"), "--gold", &d.p("missing.conll")]);
    assert!(e.contains("missing.conll"), "{e}");

    std::fs::write(d.0.join("bad.conll"), "a\tO\nb B-x\n").unwrap();
    let e = fails(&["train", "--train", &d.p("bad.conll"), "--out", &d.p("m.model")]);
    assert!(e.contains("line 2"), "{e}");

    std::fs::write(d.0.join("ok.conll"), "a\tB-x\nb\tO\n").unwrap();
    std::fs::write(d.0.join("bad.cfg"), "learning_rate = 1\nwhatever = 3\n").unwrap();
    let e = fails(&[
        "--config",
        &d.p("bad.cfg"),
        "train",
        "--train",
        &d.p("ok.conll"),
        "--out",
        &d.p("m.model"),
    ]);
    assert!(e.contains("line 2") && e.contains("whatever"), "{e}");
    let e = fails(&[
        "--set",
        "epochs=0",
        "train",
        "--train",
        &d.p("ok.conll"),
        "--out",
        &d.p("m.model"),
    ]);
    assert!(e.contains("epoch"), "{e}");

    ok(&[
        "--set",
        "hash_bits=8",
        "train",
        "--train",
        &d.p("ok.conll"),
        "--out",
        &d.p("m.model"),
    ]);
    let bytes = d.read("m.model");
    std::fs::write(d.0.join("cut.model"), &bytes[..bytes.len() - 10]).unwrap();
    let e = fails(&["eval", "--model", &d.p("cut.model"), "--gold", &d.p("ok.conll")]);
    assert!(e.contains("checksum"), "{e}");
}

#[test]
fn config_file_and_flags_layer() {
    let d = Dir::new("config");
    std::fs::write(d.0.join("ok.conll"), "a\tB-x\nb\tO\n\nc\tO\n").unwrap();
    std::fs::write(d.0.join("c.cfg"), "# small\nhash_bits = 8\nepochs = 2\nseed = 5\n").unwrap();
    ok(&[
        "--config",
        &d.p("c.cfg"),
        "train",
        "--train",
        &d.p("ok.conll"),
        "--out",
        &d.p("a.model"),
        "--report",
        &d.p("a.json"),
    ]);
    ok(&[
        "--config",
        &d.p("c.cfg"),
        "--seed",
        "9",
        "--set",
        "epochs=3",
        "train",
        "--train",
        &d.p("ok.conll"),
        "--out",
        &d.p("b.model"),
        "--report",
        &d.p("b.json"),
    ]);
    let (a, b) = (json(&d.p("a.json")), json(&d.p("b.json")));
    assert_eq!(a["config"]["seed"], 5);
    assert_eq!(a["loss_trace"].as_array().unwrap().len(), 2);
    assert_eq!(b["config"]["seed"], 9);
    assert_eq!(b["config"]["epochs"], 3);
    let (_, prov) = modelfile::load(Path::new(&d.p("b.model"))).unwrap();
    assert_eq!(prov.seed, 9);
    assert_eq!(prov.config_hash.len(), 64);
}

fn token() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9.,'é-]{1,8}"
}

fn sentence() -> impl Strategy<Value = Vec<(String, usize)>> {
    prop::collection::vec((token(), 0usize..5), 1..10)
}

proptest! {
    #[test]
    fn conll_round_trip(sentences in prop::collection::vec(sentence(), 1..6)) {
        let tags = TagSet::new(["a", "b"]).unwrap();
        let mut text = String::new();
        for (k, s) in sentences.iter().enumerate() {
            if k > 0 {
                text.push('\n');
            }
            for (tok, l) in s {
                text.push_str(&format!("{tok}\t{}\n", tags.render(*l).unwrap()));
            }
        }
        let raw = conll::parse(&text).unwrap();
        prop_assert_eq!(raw.len(), sentences.len());
        let data = conll::resolve(&raw, &tags).unwrap();
        prop_assert_eq!(conll::render(data.iter().map(|(s, y)| (s, y)), &tags), text);
    }
}
