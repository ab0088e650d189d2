use steep_cli::{cases, run, EXIT_USAGE};
use steep_core::polyjet::{jet_at, parse_polynomial, parse_point};

fn steep(args: &[&str]) -> i32 {
    run(std::iter::once("steep").chain(args.iter().copied()))
}

fn read_json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    assert_eq!(steep(&["check", "--n", "4", "--poly", cases::EXAMPLE1]), 0);
    assert_eq!(steep(&["check", "--n", "3", "--poly", cases::EXAMPLE3_LIMIT]), 1);
    assert_eq!(steep(&["check", "--n", "2", "--poly", "I1^2 + I2^2"]), 2);
    assert_eq!(steep(&["check", "--n", "4", "--mode", "heuristic", "--poly", cases::EXAMPLE1]), 3);
}

#[test]
fn check_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    assert_eq!(steep(&["check", "--point", "0,0,0", "--poly", cases::EXAMPLE3_LIMIT, "--json", p]), 1);
    let rep = read_json(&path);
    assert_eq!(rep["verdict"], "not_certified");
    assert_eq!(rep["n"], 3);
    assert!(rep["note"].as_str().unwrap().contains("sufficient"));
    let c2 = rep["conditions"].as_array().unwrap().iter().find(|c| c["id"] == "n3.cond2").unwrap();
    assert_eq!(c2["status"], "violated");
    assert_eq!(c2["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn jet_files_and_poly_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let poly = parse_polynomial(cases::EXAMPLE1, 4).unwrap();
    let jet = jet_at(&poly, &parse_point("0,0,0,0").unwrap(), 5).unwrap();
    let jet_path = dir.path().join("jet.json");
    std::fs::write(&jet_path, jet.to_json()).unwrap();
    assert_eq!(steep(&["check", "--jet-file", jet_path.to_str().unwrap()]), 0);
    // a mismatched --n is a usage error
    assert_eq!(steep(&["check", "--n", "3", "--jet-file", jet_path.to_str().unwrap()]), EXIT_USAGE);
    let poly_path = dir.path().join("h.txt");
    std::fs::write(&poly_path, format!("{}\n", cases::EXAMPLE1)).unwrap();
    assert_eq!(steep(&["check", "--n", "4", "--poly-file", poly_path.to_str().unwrap()]), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(steep(&["check", "--n", "6", "--poly", "I1"]), EXIT_USAGE);
    assert_eq!(steep(&["check", "--n", "2", "--poly", "I1 +* I2"]), EXIT_USAGE);
    assert_eq!(steep(&["check", "--poly", "I1"]), EXIT_USAGE);
    assert_eq!(steep(&["check", "--n", "3", "--point", "0,0", "--poly", "I1"]), EXIT_USAGE);
    assert_eq!(steep(&["degeneracy", "--n", "2", "--order", "6", "--poly", "I1"]), EXIT_USAGE);
    assert_eq!(steep(&["generate", "--n", "5", "--m", "5"]), EXIT_USAGE);
    assert_eq!(steep(&["table", "--n", "1"]), EXIT_USAGE);
    assert_eq!(steep(&["examples", "--only", "nope"]), EXIT_USAGE);
    assert_eq!(steep(&["frobnicate"]), EXIT_USAGE);
}

#[test]
fn degeneracy_exit_codes() {
    assert_eq!(steep(&["degeneracy", "--n", "2", "--order", "2", "--poly", "I1 + I2^2"]), 0);
    assert_eq!(steep(&["degeneracy", "--n", "4", "--order", "3", "--poly", cases::EXAMPLE1]), 1);
}

#[test]
fn generate_and_table_export_json() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    assert_eq!(steep(&["generate", "--n", "4", "--m", "2", "--json", sys.to_str().unwrap()]), 0);
    let js = read_json(&sys);
    assert_eq!(js["beta"], 5);
    assert_eq!(js["equations"].as_array().unwrap().len(), 8);
    assert_eq!(js["side_conditions"]["orthogonality"].as_array().unwrap().len(), 2);
    let table = dir.path().join("t.json");
    assert_eq!(steep(&["table", "--n", "5", "--json", table.to_str().unwrap()]), 0);
    let t = read_json(&table);
    let betas: Vec<i64> = t["rows"].as_array().unwrap().iter().map(|r| r["beta"].as_i64().unwrap()).collect();
    assert_eq!(betas, [4, 5, 4, 2]);
}

#[test]
fn examples_report_the_transcription_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    assert_eq!(steep(&["examples", "--only", "golden", "--json", path.to_str().unwrap()]), 1);
    let rep = read_json(&path);
    assert_eq!(rep["all_pass"], false);
    let lines = rep["cases"][0]["lines"].as_array().unwrap();
    let bad: Vec<&str> = lines.iter().filter_map(|l| l.as_str()).filter(|l| l.contains("DIFFERENT")).collect();
    assert_eq!(bad.len(), 1);
    assert!(bad[0].contains("n=5 m=3") && bad[0].contains("equal to"), "{bad:?}");
    assert_eq!(steep(&["examples", "--only", "example1"]), 0);
}
