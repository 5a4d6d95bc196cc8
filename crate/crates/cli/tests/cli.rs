use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metavoronoi"))
}

fn manifest() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../forms/f0.manifest").to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

#[test]
fn coefficients_at_infinity_match_the_cache() {
    let m = manifest();
    let out = run(&["coeffs", "--form", &m, "--n-max", "30", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(i64, i64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut p = l.split(',');
            (p.next().unwrap().parse().unwrap(), p.next().unwrap().parse().unwrap())
        })
        .collect();
    assert_eq!(rows, vec![(1, 1), (9, -3), (25, 5)]);
}

#[test]
fn verify_is_deterministic() {
    let m = manifest();
    let args = ["verify", "--form", &m, "--a", "1", "--b", "64", "--json"];
    let x = run(&args);
    let y = run(&args);
    assert_eq!(x.status.code(), Some(0));
    assert_eq!(x.stdout, y.stdout);
    let text = String::from_utf8(x.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    for key in ["lhs", "rhs", "abs_err", "rel_err", "lhs_terms", "rhs_terms", "rhs_tail_estimate", "cusp_constant_used", "job"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["rel_err"].as_f64().unwrap() < 1e-6);
}

#[test]
fn config_file_equals_flags() {
    let m = manifest();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.cfg");
    std::fs::write(&cfg, format!("# job\nform = {m}\na = 3\nb = 128\nbump-center = 80\nbump-radius = 30\njson = true\n")).unwrap();
    let from_cfg = run(&["verify", "--config", cfg.to_str().unwrap()]);
    let from_flags = run(&[
        "verify", "--form", &m, "--a", "3", "--b", "128", "--bump-center", "80", "--bump-radius", "30", "--json",
    ]);
    assert_eq!(from_cfg.status.code(), Some(0));
    assert_eq!(from_cfg.stdout, from_flags.stdout);
    // the command line overrides the file
    let over = run(&["verify", "--config", cfg.to_str().unwrap(), "--a", "5"]);
    let v: serde_json::Value = serde_json::from_slice(&over.stdout).unwrap();
    assert_eq!(v["job"]["a"], 5);
}

#[test]
fn perturbed_source_is_reported_as_violation() {
    let m = manifest();
    let out = run(&["verify", "--form", &m, "--a", "1", "--b", "64", "--perturb", "9:1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn batch_mode_writes_one_line_per_job() {
    let m = manifest();
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("jobs.txt");
    let out = dir.path().join("report.jsonl");
    std::fs::write(&batch, "a=1 b=64\n# skipped\na=-1 b=64\na=3 b=128 bump-center=60 bump-radius=20\n").unwrap();
    let r = run(&[
        "verify", "--form", &m, "--batch", batch.to_str().unwrap(), "--json", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1]["job"]["a"], -1);
    assert_eq!(lines[2]["job"]["b"], 128);
}

#[test]
fn kernel_csv_has_header_and_vanishes_for_negative_holomorphic() {
    let out = run(&["kernel", "--k", "1", "--sign", "-", "--x-min", "0.5", "--x-max", "3", "--points", "6", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("x,re J[holomorphic(k=1)"), "{header}");
    assert_eq!(header.split(',').count(), 3);
    let mut n = 0;
    for l in lines {
        let p: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!((p[1], p[2]), (0.0, 0.0));
        n += 1;
    }
    assert_eq!(n, 6);
}

#[test]
fn kernel_positive_branch_is_zero_for_negative_x() {
    let out = run(&["kernel", "--sign", "+", "--x-min", "-3", "--x-max", "-0.25", "--points", "12", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|p| p[0] < 0.0 && p[1] == 0.0 && p[2] == 0.0));
}

#[test]
fn kernel_positive_branch_is_nonzero() {
    let out = run(&["kernel", "--k", "1", "--sign", "+", "--x-min", "0.6", "--x-max", "0.6", "--points", "1", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let re = v["value"][0].as_f64().unwrap();
    let im = v["value"][1].as_f64().unwrap();
    assert!(re.hypot(im) > 1e-3);
}

#[test]
fn suites_pass_and_bad_input_is_infrastructure_failure() {
    let ok = run(&["check", "cocycle", "--seed", "7", "--count", "200"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(run(&["check", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--form", "/nonexistent.manifest", "--a", "1", "--b", "64"]).status.code(), Some(2));
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.tsv");
    let r = run(&["cache", "--eta", "8:3", "--order", "2000", "--out", cache.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let manifest = dir.path().join("g.manifest");
    std::fs::write(&manifest, "label = g\nk = 1\nN = 64\ncharacter = trivial\narch = holomorphic\ncache = c.tsv\n").unwrap();
    let out = run(&["coeffs", "--form", manifest.to_str().unwrap(), "--n-max", "121", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let exact: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["exact"].as_str().unwrap().to_string())
        .collect();
    // odd m up to 11, value chi_{-4}(m) m at m^2
    assert_eq!(exact, ["1", "-3", "5", "-7", "9", "-11"]);
}
