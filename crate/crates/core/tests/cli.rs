mod common;

use common::{cartography, code, s, stderr, synth_into, tree};
use std::fs;

const SMALL: &[&str] = &["--n-train", "60", "--n-eval-in", "30", "--n-eval-ood", "30"];

#[test]
fn corrupt_dataset_exits_2_citing_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    fs::write(
        &path,
        concat!(
            r#"{"id":"a1","premise":"p","hypothesis":"h","gold_label":"entailment","split":"train","distribution":"in_distribution"}"#,
            "\n{\"id\": \"a2\", \"premise\": \n"
        ),
    )
    .unwrap();
    let out = cartography(&["validate", "--dataset", s(&path)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn role_mismatch_and_unresolved_predictions_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, predictions, _) = synth_into(dir.path(), SMALL);
    let out = cartography(&["validate", "--train", s(&dataset)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"sample_id\":\"zz\",\"epoch\":1,\"p_true\":0.5}\n").unwrap();
    let out = cartography(&[
        "validate",
        "--dataset",
        s(&dataset),
        "--predictions",
        s(&bad),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("zz"));

    let out = cartography(&[
        "validate",
        "--dataset",
        s(&dataset),
        "--predictions",
        s(&predictions),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&cartography(&[])), 1);
    assert_eq!(code(&cartography(&["report", "--out", "x"])), 1);
    assert_eq!(
        code(&cartography(&["report", "--dataset", "d", "--tau-v", "2"])),
        1
    );
    assert_eq!(
        code(&cartography(&[
            "synth",
            "--out",
            "x",
            "--vocabulary-size",
            "3"
        ])),
        1
    );
    assert_eq!(code(&cartography(&["--version"])), 0);
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, predictions, _) = synth_into(dir.path(), SMALL);
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let out = cartography(&[
        "heuristics",
        "--dataset",
        s(&dataset),
        "--predictions",
        s(&predictions),
        "--out",
        s(&blocker.join("run")),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn map_epochs_2_and_8_write_four_svgs() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, predictions, _) = synth_into(dir.path(), SMALL);
    let run = dir.path().join("run");
    let out = cartography(&[
        "map",
        "--dataset",
        s(&dataset),
        "--predictions",
        s(&predictions),
        "--epochs",
        "2,8",
        "--out",
        s(&run),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let names: Vec<String> = tree(&run).into_keys().collect();
    assert_eq!(
        names,
        [
            "maps/map_eval_e2.svg",
            "maps/map_eval_e8.svg",
            "maps/map_train_e2.svg",
            "maps/map_train_e8.svg"
        ]
    );

    let out = cartography(&[
        "map",
        "--dataset",
        s(&dataset),
        "--predictions",
        s(&predictions),
        "--epochs",
        "9",
        "--out",
        s(&run),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn report_equals_composition_of_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, predictions, _) = synth_into(dir.path(), SMALL);
    let composed = dir.path().join("composed");
    let report = dir.path().join("report");
    let common_args = |out: &std::path::Path| {
        vec![
            "--dataset".to_string(),
            s(&dataset).to_string(),
            "--predictions".to_string(),
            s(&predictions).to_string(),
            "--measures".to_string(),
            "m1,m2".to_string(),
            "--sample-fraction".to_string(),
            "0.5".to_string(),
            "--seed".to_string(),
            "11".to_string(),
            "--out".to_string(),
            s(out).to_string(),
        ]
    };
    for cmd in ["validate", "heuristics", "dynamics", "correlate", "map"] {
        let mut args = vec![cmd.to_string()];
        args.extend(common_args(&composed));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = cartography(&args);
        assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
    }
    let mut args = vec!["report".to_string()];
    args.extend(common_args(&report));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(code(&cartography(&args)), 0);

    let mut reported = tree(&report);
    let manifest = reported.remove("manifest.json").expect("manifest written");
    assert_eq!(reported, tree(&composed));

    let manifest: serde_json::Value = serde_json::from_slice(&manifest).unwrap();
    assert_eq!(manifest["coefficient"], "pearson");
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    let listed: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(
        listed,
        reported.keys().map(String::as_str).collect::<Vec<_>>()
    );
}

#[test]
fn config_file_is_equivalent_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, predictions, _) = synth_into(dir.path(), SMALL);
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        serde_json::json!({
            "dataset": [dataset],
            "predictions": [predictions],
            "tau_v": 0.2,
            "epochs": [1, 8],
        })
        .to_string(),
    )
    .unwrap();
    let via_config = dir.path().join("a");
    let via_flags = dir.path().join("b");
    let out = cartography(&["report", "--config", s(&config), "--out", s(&via_config)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = cartography(&[
        "report",
        "--dataset",
        s(&dataset),
        "--predictions",
        s(&predictions),
        "--tau-v",
        "0.2",
        "--epochs",
        "1,8",
        "--out",
        s(&via_flags),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(tree(&via_config), tree(&via_flags));
}

#[test]
fn synth_twice_is_byte_identical_and_empty_spec_gives_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    synth_into(&a, &["--seed", "7"]);
    synth_into(&b, &["--seed", "7"]);
    assert_eq!(tree(&a), tree(&b));

    let empty = dir.path().join("empty");
    synth_into(
        &empty,
        &["--n-train", "0", "--n-eval-in", "0", "--n-eval-ood", "0"],
    );
    let files = tree(&empty);
    assert_eq!(files.len(), 3);
    assert!(files.values().all(|bytes| bytes.is_empty()));
}

#[test]
fn verify_passes_untampered_and_names_divergences() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, predictions, oracle) = synth_into(dir.path(), SMALL);
    let run = dir.path().join("run");
    let out = cartography(&[
        "report",
        "--dataset",
        s(&dataset),
        "--predictions",
        s(&predictions),
        "--out",
        s(&run),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = cartography(&["verify", "--oracle", s(&oracle), "--run", s(&run)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // Perturb one confidence by 1e-3.
    let dynamics = run.join("dynamics.csv");
    let original = fs::read_to_string(&dynamics).unwrap();
    let mut lines: Vec<String> = original.lines().map(str::to_string).collect();
    let target = lines
        .iter()
        .position(|l| l.starts_with("in-000004,") && l.contains(",3,"))
        .unwrap();
    let mut cells: Vec<String> = lines[target].split(',').map(str::to_string).collect();
    let conf: f64 = cells[4].parse().unwrap();
    cells[4] = format!("{:.9}", if conf > 0.5 { conf - 1e-3 } else { conf + 1e-3 });
    lines[target] = cells.join(",");
    fs::write(&dynamics, lines.join("\n") + "\n").unwrap();
    let out = cartography(&["verify", "--oracle", s(&oracle), "--run", s(&run)]);
    assert_eq!(code(&out), 3);
    let msg = stderr(&out);
    assert!(msg.contains("sample=in-000004 epoch=3"), "{msg}");
    assert!(msg.contains("confidence"), "{msg}");

    // Drop the last epoch entirely.
    let truncated: Vec<&str> = original.lines().filter(|l| !l.contains(",8,")).collect();
    fs::write(&dynamics, truncated.join("\n") + "\n").unwrap();
    let out = cartography(&["verify", "--oracle", s(&oracle), "--run", s(&run)]);
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("missing from dynamics"),
        "{}",
        stderr(&out)
    );

    // A table with the wrong columns is a schema error.
    fs::write(&dynamics, "sample_id,epoch\nx,1\n").unwrap();
    let out = cartography(&["verify", "--oracle", s(&oracle), "--run", s(&run)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}
