use assert_cmd::Command;
use serde_json::Value;

fn dormant(args: &[&str]) -> (i32, Value, String) {
    let out = Command::cargo_bin("dormant").unwrap().args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json, String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn chsh_psi3_is_root_two() {
    let (code, v, _) = dormant(&["chsh", "--family", "psi3", "--pair", "1,2"]);
    assert_eq!(code, 0);
    let s = v["results"]["result"]["s_max"].as_f64().unwrap();
    assert!((s - std::f64::consts::SQRT_2).abs() < 1e-9);
    assert_eq!(v["command"], "chsh");
    assert_eq!(v["seed"], 0);
}

#[test]
fn chsh_all_patterns_lists_eight() {
    let (code, v, _) = dormant(&["chsh", "--family", "phi1", "--all-patterns"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["result"]["s_per_pattern"].as_array().unwrap().len(), 8);
}

#[test]
fn resources_five_one() {
    let (code, v, _) = dormant(&["resources", "--n", "5", "--k", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["point_to_point"], 20);
    assert_eq!(v["results"]["collective"], 5);
}

#[test]
fn classify_levels() {
    for (family, extra, level) in [
        ("phi3", vec![], "Type1"),
        ("psiN", vec!["--n", "5"], "Type2"),
        ("psi3L", vec![], "Type3"),
    ] {
        let mut args = vec!["classify", "--family", family, "--pair", "1,2"];
        args.extend(extra);
        let (code, v, _) = dormant(&args);
        assert_eq!(code, 0);
        assert_eq!(v["results"]["level"], level, "{family}");
    }
}

#[test]
fn build_lists_support() {
    let (code, v, _) = dormant(&["build", "--family", "psi3L"]);
    assert_eq!(code, 0);
    let bits: Vec<&str> = v["results"]["amplitudes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["bits"].as_str().unwrap())
        .collect();
    assert_eq!(bits, ["0000", "0111", "1010", "1101"]);
}

#[test]
fn correlate_hadamard_is_perfect() {
    let (code, v, _) = dormant(&[
        "correlate",
        "--family",
        "psi3",
        "--measured",
        "1",
        "--target",
        "2",
        "--basis-m",
        "hadamard",
        "--basis-t",
        "hadamard",
    ]);
    assert_eq!(code, 0);
    let r = &v["results"]["report"];
    assert!((r["p_conditional_given_0"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["correlated"], true);
}

#[test]
fn channel_with_deviant_is_destroyed() {
    let (code, v, _) = dormant(&["channel", "--n", "5", "--endpoints", "1,2", "--deviant", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["final"]["status"], "destroyed");
    assert_eq!(v["results"]["transcript"].as_array().unwrap().len(), 3);
}

#[test]
fn channel_teleports() {
    let (code, v, _) = dormant(&[
        "channel",
        "--n",
        "4",
        "--endpoints",
        "2,4",
        "--teleport-trials",
        "20",
        "--seed",
        "9",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["final"]["status"], "activated");
    assert!((v["results"]["teleport"]["min_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn same_seed_same_bytes() {
    let args = ["channel", "--n", "6", "--teleport-trials", "10", "--seed", "42"];
    let a = Command::cargo_bin("dormant").unwrap().args(args).output().unwrap();
    let b = Command::cargo_bin("dormant").unwrap().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let sweep = ["chsh", "--family", "psi3", "--rotations", "300", "--seed", "5"];
    let a = Command::cargo_bin("dormant").unwrap().args(sweep).output().unwrap();
    let b = Command::cargo_bin("dormant").unwrap().args(sweep).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn permtest_exhaustive_and_random() {
    let (code, v, _) = dormant(&["permtest", "--n", "6"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["checked"], 720);
    let (code, v, _) = dormant(&["permtest", "--n", "8", "--samples", "50"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["mode"], "random");
}

#[test]
fn failing_check_exits_one() {
    // a negative tolerance cannot be met
    let (code, v, _) = dormant(&["permtest", "--n", "4", "--tolerance=-1"]);
    assert_eq!(code, 1);
    assert_eq!(v["results"]["invariant"], false);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["nonsense"],
        vec!["chsh"],
        vec!["build", "--family", "psiN"],
        vec!["build", "--family", "ghz"],
        vec!["resources", "--n", "2", "--k", "1"],
        vec!["channel", "--n", "5", "--endpoints", "2,2"],
        vec!["channel", "--n", "5", "--deviant", "1"],
        vec![
            "correlate",
            "--family",
            "psi3",
            "--measured",
            "1",
            "--target",
            "2",
            "--basis-m",
            "u:1,0",
        ],
    ] {
        let (code, _, _) = dormant(&args);
        assert_eq!(code, 2, "{args:?}");
    }
}

#[test]
fn csv_has_dotted_header() {
    let out = Command::cargo_bin("dormant")
        .unwrap()
        .args(["resources", "--n", "10", "--k", "4", "--format", "csv"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("results.point_to_point"), "90");
    assert_eq!(col("results.collective"), "40");
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("dormant-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let status = Command::cargo_bin("dormant")
        .unwrap()
        .args(["resources", "--n", "3", "--k", "1", "--out", path.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["results"]["point_to_point"], 6);
    std::fs::remove_dir_all(dir).unwrap();
}
