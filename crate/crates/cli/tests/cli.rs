use std::process::{Command, Output};

fn coboson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coboson")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(Result::unwrap).collect()
}

#[test]
fn uniform_four_rational_rows() {
    let out = coboson(&["stats", "--profile", "uniform:4", "--n", "2..4", "--mode", "rational"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "N,eta,mean_n,mean_n2,variance,Q,g2,Q_approx,g2_approx_a,g2_approx_b,g2_large_sample,g2_elementary,Q_elementary,status"
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][0], "2");
    assert_eq!(&rows[0][1], "");
    assert_eq!(&rows[0][5], "-1");
    assert_eq!(&rows[0][6], "2/3");
    assert_eq!(&rows[0][13], "ok");
}

#[test]
fn blocked_rows_are_empty() {
    let out = coboson(&["stats", "--profile", "uniform:3", "--n", "2..5"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    for row in &rows[2..] {
        assert_eq!(&row[13], "blocked");
        assert!((1..13).all(|i| row[i].is_empty()));
    }
    assert_eq!(&rows[1][13], "ok");
}

#[test]
fn hydrogenic_small_density() {
    let out = coboson(&["stats", "--profile", "hydrogenic:0.01", "--n", "2..100", "--mode", "float"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 99);
    let q: f64 = rows[0][5].parse().unwrap();
    // Leading order in the density; the next order is ~1e-4 of the offset here.
    let offset = 2021.0 * std::f64::consts::PI.powi(2) / 8.0 * 1e-12;
    assert!(((q + 1.0) / offset - 1.0).abs() < 1e-3, "{q} vs -1 + {offset}");
    let eta: f64 = rows[98][1].parse().unwrap();
    assert!((eta - 1e-4).abs() < 1e-18);
    // 17 significant digits
    let mantissa = rows[0][5].split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn json_output_has_metadata() {
    let out = coboson(&[
        "stats", "--profile", "hydrogenic:0.01", "--n", "2..6:2", "--format", "json", "--lambda-max", "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let meta = &doc["metadata"];
    assert_eq!(meta["profile"], "hydrogenic:0.01");
    assert_eq!(meta["mode"], "float");
    assert_eq!(meta["lambda_max"], 5);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert!(meta["hydrogenic_profile"].as_str().unwrap().contains("exponent 4"));
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.iter().map(|r| r["N"].as_u64().unwrap()).collect::<Vec<_>>(), vec![2, 4, 6]);
    assert!(rows[0]["variance_error"].is_string());
}

#[test]
fn verify_passes() {
    let out = coboson(&["verify", "--profile", "uniform:4", "--n-max", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&stdout(&out));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[3] == "pass"));

    let out = coboson(&["verify", "--random", "50", "--modes", "6", "--seed", "42", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["metadata"]["seed"], 42);
    let checks = doc["rows"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    let profiles: std::collections::BTreeSet<_> = checks.iter().map(|c| c["profile"].as_str().unwrap()).collect();
    assert_eq!(profiles.len(), 50);
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--random", "5", "--modes", "5", "--seed", "7"];
    assert_eq!(coboson(&args).stdout, coboson(&args).stdout);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["verify", "--profile", "hydrogenic:0.01"],
        vec!["stats", "--profile", "hydrogenic:0.01", "--n", "2..3", "--mode", "rational"],
        vec!["stats", "--profile", "uniform:4", "--n", "2..3", "--lambda-max", "3"],
        vec!["stats", "--profile", "uniform:0", "--n", "2..3"],
        vec!["stats", "--profile", "uniform:4", "--n", "3..2"],
        vec!["verify", "--profile", "uniform:13"],
        vec!["verify", "--profile", "uniform:4", "--n-max", "5"],
        vec!["stats", "--profile", "file:/nonexistent/profile.json", "--n", "1..2"],
        vec!["frobnicate"],
    ] {
        let out = coboson(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn precision_exhaustion_exits_three() {
    let out = coboson(&["stats", "--profile", "hydrogenic:0.05", "--n", "1..3000:100", "--mode", "float"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // Rows are still written; the unreliable ones are flagged.
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 30);
    assert_eq!(&rows[0][13], "ok");
    assert_eq!(&rows[29][13], "precision");
    assert!(String::from_utf8_lossy(&out.stderr).contains("last reliable N"));

    // Dense enough that the continuum lambdas stop describing a norm at all.
    let out = coboson(&["stats", "--profile", "hydrogenic:0.2", "--n", "1..10", "--mode", "float"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn file_profiles_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("p.json");
    std::fs::write(&profile, r#"{"label": "skew", "weights": ["1/2", "1/4", "1/4"]}"#).unwrap();
    let spec = format!("file:{}", profile.display());
    let target = dir.path().join("out.csv");

    let out = coboson(&["lambdas", "--profile", &spec, "--n-max", "3", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let rows = csv_rows(&std::fs::read_to_string(&target).unwrap());
    assert_eq!(&rows[1][1], "3/8");
    assert_eq!(&rows[2][1], "5/32");

    let out = coboson(&["verify", "--profile", &spec]);
    assert_eq!(out.status.code(), Some(0));

    std::fs::write(&profile, r#"{"label": "bad", "weights": [1, 1]}"#).unwrap();
    assert_eq!(coboson(&["stats", "--profile", &spec, "--n", "1"]).status.code(), Some(2));
}
