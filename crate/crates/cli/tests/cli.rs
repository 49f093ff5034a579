use std::path::Path;
use std::process::{Command, Output};

use backfire_core::io::{read_report_csv, read_weights_path, write_projects_csv};
use backfire_core::{FuzzyLevelSet, ProjectRecord};

fn backfire(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_backfire"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_dataset(dir: &Path, name: &str, records: &[ProjectRecord]) {
    std::fs::write(dir.join(name), write_projects_csv(records)).unwrap();
}

#[test]
fn estimate_forward_and_reverse() {
    let dir = tempfile::tempdir().unwrap();
    let out = backfire(dir.path(), &["estimate", "--language", "Java", "--fp", "100"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "3600.00 SLOC (ratio 36.00 SLOC/FP)");

    let out = backfire(dir.path(), &["estimate", "--level", "3.0", "--sloc", "1070"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "10.00 FP (ratio 107.00 SLOC/FP)");
}

#[test]
fn estimate_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["estimate", "--language", "Java", "--fp", "100", "--sloc", "5"][..],
        &["estimate", "--language", "Java"],
        &["estimate", "--fp", "3"],
        &["estimate", "--language", "Java", "--fp", "1", "--bogus"],
    ] {
        let out = backfire(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        assert!(stdout(&out).is_empty());
    }
    let out = backfire(dir.path(), &["estimate", "--language", "Klingon", "--fp", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("Klingon"));
    let out = backfire(dir.path(), &["estimate", "--level", "60", "--fp", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("outside covered interval"));
}

#[test]
fn calibrate_on_consistent_data_keeps_published_averages() {
    let dir = tempfile::tempdir().unwrap();
    let levels = FuzzyLevelSet::default();
    let out = backfire(dir.path(), &["generate", "--out", "d.csv", "--per-level", "30"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = backfire(dir.path(), &["calibrate", "--data", "d.csv", "--out", "w.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("epochs run: "));
    assert!(stderr(&out).contains("data_sha256="));
    let w = read_weights_path(dir.path().join("w.csv")).unwrap();
    for (a, b) in w.weights.iter().zip(levels.averages()) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn calibrate_follows_drifted_level() {
    let dir = tempfile::tempdir().unwrap();
    // Cobol projects written at 95 SLOC/FP instead of 107
    let records: Vec<_> = (0..60)
        .map(|i| {
            let ufp = 20.0 + 31.0 * i as f64;
            ProjectRecord::new(format!("p{i}"), "Cobol", ufp, ufp * 95.0).unwrap()
        })
        .collect();
    write_dataset(dir.path(), "cobol.csv", &records);
    let out = backfire(dir.path(), &["calibrate", "--data", "cobol.csv", "--out", "w.csv", "--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let w = read_weights_path(dir.path().join("w.csv")).unwrap();
    assert!((w.weights[1] - 95.0).abs() / 95.0 < 0.01, "{}", w.weights[1]);
    assert_eq!(w.config.rng_seed, 3);

    let out = backfire(dir.path(), &["estimate", "--language", "cobol", "--fp", "10", "--weights", "w.csv"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("ratio 95.0"), "{}", stdout(&out));

    let out = backfire(dir.path(), &["table", "--weights", "w.csv"]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().nth(2).unwrap().starts_with("2,2.5,3,95"));
}

#[test]
fn calibrate_reports_unknown_language() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.csv"),
        "id,language,ufp,sloc\np1,Java,10,360\np2,Klingon,10,360\n",
    )
    .unwrap();
    let out = backfire(dir.path(), &["calibrate", "--data", "bad.csv", "--out", "w.csv"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("p2") && err.contains("Klingon"), "{err}");
    assert!(!dir.path().join("w.csv").exists());

    std::fs::write(dir.path().join("neg.csv"), "id,language,ufp,sloc\np1,Java,-5,360\n").unwrap();
    let out = backfire(dir.path(), &["calibrate", "--data", "neg.csv", "--out", "w.csv"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn experiment_all_and_single() {
    let dir = tempfile::tempdir().unwrap();
    let out = backfire(dir.path(), &["generate", "--out", "d.csv", "--per-level", "8", "--noise", "0.1", "--seed", "5"]);
    assert!(out.status.success());
    let out = backfire(dir.path(), &["experiment", "--data", "d.csv", "--all", "--out", "r.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(text.contains("# split_seeds=1:1 2:2 5:5 6:6"));
    let rows = read_report_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 7);
    assert_eq!((rows[6].training_samples, rows[6].test_samples), (152, 152));

    for _ in 0..2 {
        let out = backfire(dir.path(), &["experiment", "--data", "d.csv", "--id", "1", "--out", "one.csv"]);
        assert!(out.status.success());
    }
    let one = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(read_report_csv(one.as_bytes()).unwrap(), rows[..1].to_vec());

    for args in [
        &["experiment", "--data", "d.csv", "--id", "9", "--out", "x.csv"][..],
        &["experiment", "--data", "d.csv", "--out", "x.csv"],
        &["experiment", "--data", "d.csv", "--id", "1", "--all", "--out", "x.csv"],
    ] {
        let out = backfire(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn table_curve_and_evaluate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = backfire(dir.path(), &["table", "--programming"]);
    assert!(stdout(&out).starts_with("name,level,low,mean,high\nBasic Assembly,1,213,320,427\n"));
    let out = backfire(dir.path(), &["table"]);
    assert!(stdout(&out).starts_with("index,range_low,range_high,avg_ratio,clamp_min,clamp_max\n1,0,2.5,128,21,427\n"));
    let out = backfire(dir.path(), &["curve"]);
    let curve = stdout(&out);
    assert!(curve.starts_with("language_level,sloc_per_fp\n2.5,128\n"));
    assert!(curve.ends_with("50,6\n"));

    backfire(dir.path(), &["generate", "--out", "d.csv", "--per-level", "3"]);
    let out = backfire(dir.path(), &["evaluate", "--data", "d.csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("model,n,mmre,mmer,pred25,pred50"));
    let default_row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(default_row[..2], ["default", "57"]);
    assert!(default_row[2].parse::<f64>().unwrap() < 0.01);
}

#[test]
fn custom_tables_are_honoured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("langs.csv"),
        "name,level,low,mean,high\nRust,5,30,50,80\nPython,10,10,20,40\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("levels.csv"),
        "index,range_low,range_high,avg_ratio\n1,0,5,50\n2,5,10,20\n",
    )
    .unwrap();
    let out = backfire(
        dir.path(),
        &["estimate", "--table", "langs.csv", "--levels", "levels.csv", "--language", "rust", "--fp", "2"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("ratio 50.0"), "{}", stdout(&out));

    std::fs::write(dir.path().join("broken.csv"), "name,level,low,mean,high\nRust,5,30,20,80\n").unwrap();
    let out = backfire(dir.path(), &["table", "--programming", "--table", "broken.csv"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 2"));

    // weights from the default levels do not fit the custom ones
    backfire(dir.path(), &["generate", "--out", "d.csv", "--per-level", "2"]);
    backfire(dir.path(), &["calibrate", "--data", "d.csv", "--out", "w.csv"]);
    let out = backfire(
        dir.path(),
        &["curve", "--weights", "w.csv", "--table", "langs.csv", "--levels", "levels.csv"],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("stale weights"), "{}", stderr(&out));
}
