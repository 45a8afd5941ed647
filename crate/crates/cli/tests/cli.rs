use std::path::Path;
use std::process::{Command, Output};

use laeo_cli::{EXIT_INVALID, EXIT_NUMERICAL};

fn laeo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laeo")).args(args).arg("--out").arg(out).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn synth_is_byte_identical_per_seed_and_differs_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        assert!(laeo(&["synth", "--n", "5", "--seed", seed], &out).status.success());
        std::fs::read(out.join("scenes.jsonl")).unwrap()
    };
    assert_eq!(read("a", "3"), read("b", "3"));
    assert_ne!(read("a", "3"), read("c", "4"));
}

#[test]
fn manifest_lists_outputs_and_settings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert!(laeo(&["synth", "--n", "3"], &out).status.success());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "synth");
    assert_eq!(m["seed"], 42);
    assert_eq!(m["settings"]["n"], 3);
    assert_eq!(m["outputs"], serde_json::json!(["scenes.jsonl"]));
}

#[test]
fn labels_of_clean_scenes_match_the_truth() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("s");
    assert!(laeo(&["synth", "--n", "4"], &synth).status.success());
    let input = synth.join("scenes.jsonl");
    let out = dir.path().join("l");
    assert!(laeo(&["labels", "--input", input.to_str().unwrap()], &out).status.success());
    let mut reader = csv::Reader::from_path(out.join("labels.csv")).unwrap();
    let errors: Vec<f64> =
        reader.deserialize::<(String, String, f64, f64, f64, f64, f64)>().map(|r| r.unwrap().6).collect();
    assert_eq!(errors.len(), 8);
    assert!(errors.iter().all(|e| *e < 1e-6), "{errors:?}");
}

#[test]
fn gradcheck_passes_and_a_failed_check_exits_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let ok = laeo(&["gradcheck", "--n", "10"], &dir.path().join("ok"));
    assert!(ok.status.success(), "{}", stderr(&ok));
    let strict = dir.path().join("strict.toml");
    std::fs::write(&strict, "tolerance = 1e-20\n").unwrap();
    let failed = laeo(&["gradcheck", "--n", "5", "--config", strict.to_str().unwrap()], &dir.path().join("bad"));
    assert_eq!(failed.status.code(), Some(EXIT_NUMERICAL));
    assert!(dir.path().join("bad/gradcheck.csv").exists());
}

#[test]
fn diverging_training_exits_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "learning_rate = 1e300\niterations = 20\npredictor = \"direct\"\nn_heldout = 0\n").unwrap();
    let o = laeo(&["train", "--n", "5", "--config", config.to_str().unwrap()], &dir.path().join("t"));
    assert_eq!(o.status.code(), Some(EXIT_NUMERICAL), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
}

#[test]
fn ablation_separates_collapsing_and_anchored_loss_sets() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "seeds = 1\n").unwrap();
    let out = dir.path().join("a");
    let o = laeo(
        &[
            "ablate",
            "--n",
            "40",
            "--losses",
            "pseudo",
            "--losses",
            "geom3d,geom2d,pseudo,sym",
            "--config",
            config.to_str().unwrap(),
        ],
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("ablation_medians.csv")).unwrap();
    let rows: Vec<(String, usize, f64)> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].2 >= 20.0 && rows[1].2 < 2.0, "{rows:?}");
}

#[test]
fn unknown_flag_exits_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let o = laeo(&["synth", "--bogus"], &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "n = 3\nfocal = 10\n").unwrap();
    let o = laeo(&["synth", "--config", config.to_str().unwrap()], &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
    assert!(stderr(&o).contains("\"focal\""), "{}", stderr(&o));
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = laeo(&["labels", "--input", "no/such/scenes.jsonl"], &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
    assert!(stderr(&o).contains("no/such/scenes.jsonl"));
}

#[test]
fn malformed_scene_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.jsonl");
    std::fs::write(&input, "{\"not\": \"a scene\"}\n").unwrap();
    let o = laeo(&["labels", "--input", input.to_str().unwrap()], &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn help_documents_exit_codes() {
    let o = Command::new(env!("CARGO_BIN_EXE_laeo")).arg("--help").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("Exit codes"));
}

#[test]
fn detect_reads_back_its_synthetic_frames() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    assert!(laeo(&["detect", "--n", "8"], &first).status.success());
    let frames = first.join("frames.jsonl");
    let second = dir.path().join("b");
    assert!(laeo(&["detect", "--input", frames.to_str().unwrap()], &second).status.success());
    assert_eq!(
        std::fs::read(first.join("decisions.csv")).unwrap(),
        std::fs::read(second.join("decisions.csv")).unwrap()
    );
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(second.join("metrics.json")).unwrap()).unwrap();
    assert_eq!((m["precision"].as_f64(), m["recall"].as_f64()), (Some(1.0), Some(1.0)));
}
