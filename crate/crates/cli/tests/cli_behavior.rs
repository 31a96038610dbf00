//! End-to-end checks of the binary's output contract: formats, config
//! handling, determinism, and error reporting.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entanglab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("output should be utf-8")
}

/// CSV data section: everything that is not a `#` metadata line.
fn data_section(csv: &str) -> String {
    csv.lines()
        .filter(|line| !line.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.trim()).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {stderr}"))
}

#[test]
fn csv_has_sorted_metadata_then_header_then_rows() {
    let text = stdout_of(&["entropy-divergence", "--n", "100,1000,10000"]);
    let lines: Vec<&str> = text.lines().collect();
    let meta: Vec<&str> = lines.iter().copied().take_while(|l| l.starts_with('#')).collect();
    assert!(!meta.is_empty());
    let mut sorted = meta.clone();
    sorted.sort();
    assert_eq!(meta, sorted, "metadata keys should be sorted");
    assert!(meta.iter().any(|l| l.starts_with("# command = ")));
    assert!(meta.iter().any(|l| l.starts_with("# version = ")));
    assert!(meta.iter().any(|l| l.starts_with("# threads = ")));
    assert!(meta.iter().any(|l| l.starts_with("# timestamp_unix = ")));
    assert!(meta.iter().any(|l| l.starts_with("# seed = ")));

    let body: Vec<&str> = lines.iter().copied().skip(meta.len()).collect();
    assert_eq!(body[0], "n,entropy_bits", "header row must come first");
    assert_eq!(body.len(), 4);

    // The block entropies must grow strictly with the cutoff.
    let entropies: Vec<f64> = body[1..]
        .iter()
        .map(|row| row.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(entropies[0] < entropies[1] && entropies[1] < entropies[2]);
}

#[test]
fn json_output_validates_against_the_shipped_schema() {
    let schema_path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas/output.schema.json");
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema should compile");

    for args in [
        vec!["entropy-divergence", "--format", "json"],
        vec!["schmidt", "--d", "3", "--format", "json"],
        vec!["nogo-bound", "--d", "2", "--samples", "20", "--format", "json"],
        vec!["weyl-projector", "--d", "2,3", "--format", "json"],
        vec!["char-fn", "--r", "1", "--points", "3", "--format", "json"],
        vec!["epr-covariance", "--r", "0,1", "--trunc", "64", "--format", "json"],
    ] {
        let text = stdout_of(&args);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?} violates the schema: {errors:?}");
    }
}

#[test]
fn reruns_and_thread_counts_leave_the_data_section_unchanged() {
    let args = ["modular", "--d", "3", "--samples", "4", "--seed", "5"];
    let first = stdout_of(&args);
    let second = stdout_of(&args);
    assert_eq!(data_section(&first), data_section(&second));

    let threaded = bin()
        .args(args)
        .env("ENTANGLAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(threaded.status.success());
    let threaded = String::from_utf8(threaded.stdout).unwrap();
    // A sequential build reports its single worker whatever the request.
    if cfg!(feature = "parallel") {
        assert!(threaded.contains("# threads = 2"));
    } else {
        assert!(threaded.contains("# threads = 1"));
    }
    assert_eq!(data_section(&first), data_section(&threaded));
}

#[test]
fn json_reruns_agree_outside_the_timestamp() {
    let args = ["doubles", "--samples", "2", "--format", "json", "--seed", "3"];
    let strip = |text: &str| -> serde_json::Value {
        let mut doc: serde_json::Value = serde_json::from_str(text).unwrap();
        doc.as_object_mut().unwrap()["metadata"]
            .as_object_mut()
            .unwrap()
            .remove("timestamp_unix");
        doc
    };
    assert_eq!(strip(&stdout_of(&args)), strip(&stdout_of(&args)));
}

#[test]
fn usage_errors_are_machine_readable_and_exit_2() {
    let out = run(&["nogo-bound", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "usage");
    assert!(err["error"]["message"].as_str().unwrap().contains("--no-such-flag"));
}

#[test]
fn config_errors_are_machine_readable_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "format = \"yaml\"\n").unwrap();
    let out = run(&["entropy-divergence", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "config");

    // Unparseable TOML is a config error too, not a crash.
    std::fs::write(&path, "= nonsense =\n").unwrap();
    let out = run(&["entropy-divergence", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "config");
}

#[test]
fn lambda_and_r_are_mutually_exclusive() {
    let out = run(&["nopa-extract", "--lambda", "0.5", "--r", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("exactly one"));

    // The derived parameter is echoed alongside the given one.
    let text = stdout_of(&["nopa-extract", "--r", "1.0", "--trunc", "32"]);
    assert!(text.contains("# lambda = [0.7615941559557649]"));
    assert!(text.contains("# r = [1.0]"));
}

#[test]
fn config_file_supplies_values_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "seed = 7\nd = \"2,3\"\nsamples = 40\n").unwrap();
    let cfg = path.to_str().unwrap();

    let from_file = stdout_of(&["nogo-bound", "--config", cfg]);
    assert!(from_file.contains("# seed = 7"));
    assert!(from_file.contains("# samples = 40"));
    let rows = data_section(&from_file);
    assert_eq!(rows.lines().count(), 3, "two dimensions plus the header");

    let overridden = stdout_of(&["nogo-bound", "--config", cfg, "--d", "4", "--samples", "10"]);
    assert!(overridden.contains("# samples = 10"));
    let rows = data_section(&overridden);
    assert_eq!(rows.lines().count(), 2);
    assert!(rows.lines().nth(1).unwrap().starts_with("4,10,"));
}

#[test]
fn seed_is_echoed_and_steers_the_random_draws() {
    let one = stdout_of(&["nogo-bound", "--d", "3", "--samples", "25", "--seed", "1"]);
    let two = stdout_of(&["nogo-bound", "--d", "3", "--samples", "25", "--seed", "2"]);
    assert!(one.contains("# seed = 1"));
    assert!(two.contains("# seed = 2"));
    assert_ne!(data_section(&one), data_section(&two));
}

#[test]
fn out_flag_writes_the_rendered_table_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let printed = stdout_of(&["entropy-divergence", "--n", "100"]);
    let out = run(&["entropy-divergence", "--n", "100", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "--out should silence stdout");
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(data_section(&printed), data_section(&written));
}

#[test]
fn chain_expect_takes_a_custom_observable_file() {
    use entanglab_core::{bell, chain};

    let witness = bell::tsirelson_witness(2, 2).unwrap();
    let obs = bell::test_operator(1000, 3u32, &witness).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.json");
    std::fs::write(&path, obs.canonical_json()).unwrap();

    let text = stdout_of(&["chain-expect", "--obs-file", path.to_str().unwrap()]);
    let row = data_section(&text).lines().nth(1).unwrap().to_string();
    let mut cells = row.split(',');
    assert_eq!(cells.next(), Some("custom"));
    let re: f64 = cells.next().unwrap().parse().unwrap();

    let expected = chain::expect(&chain::ChainState::default_chain(), &obs);
    assert!((re - expected.re).abs() <= 1e-12);
}

#[test]
fn grid_export_produces_a_loadable_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.eprg");
    stdout_of(&[
        "grid-extract",
        "--r",
        "1",
        "--l",
        "128",
        "--extent-pi",
        "8",
        "--export",
        path.to_str().unwrap(),
    ]);
    let file = std::fs::File::open(&path).unwrap();
    let state = entanglab_core::grid::GridState::import(file).unwrap();
    assert_eq!(state.points(), 128);
    let norm = state.inner(&state).unwrap();
    assert!((norm.re - 1.0).abs() <= 1e-8 && norm.im.abs() <= 1e-12);
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let help = String::from_utf8(out.stdout).unwrap();
    for name in [
        "schmidt",
        "entropy-divergence",
        "nogo-bound",
        "bell-seesaw",
        "chain-expect",
        "modular",
        "doubles",
        "weyl-projector",
        "nopa-extract",
        "nopa-perm",
        "epr-covariance",
        "char-fn",
        "grid-extract",
    ] {
        assert!(help.contains(name), "help is missing {name}");
    }
}

#[test]
fn compute_failures_exit_1_with_io_and_compute_kinds() {
    // Unreadable observable file surfaces as an io error.
    let out = run(&["chain-expect", "--obs-file", "/nonexistent/obs.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "io");

    // A grid too small for the squeezed state is a config-class failure.
    let out = run(&["grid-extract", "--r", "3", "--l", "64", "--extent-pi", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "config");
}
