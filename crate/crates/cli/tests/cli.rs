use std::process::Command;

fn lbc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lbc"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn fractions_prints_the_table() {
    let out = lbc(&["fractions", "--m-list", "100,215"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("m,forward_pct_mixed_a,forward_pct_mixed_b,condition_mixed_a,condition_mixed_b")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "100");
    assert_eq!(format!("{:.1}", first[1].parse::<f64>().unwrap()), "57.0");
    assert_eq!(format!("{:.1}", first[2].parse::<f64>().unwrap()), "58.0");
    assert_eq!(lines.count(), 1);
}

#[test]
fn verify_selected_criteria() {
    let out = lbc(&["verify", "--criteria", "5,6"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}

#[test]
fn unknown_scheme_is_an_error() {
    let out = lbc(&["stability", "--scheme", "upwind9", "--m-list", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn out_writes_a_file() {
    let path = std::env::temp_dir().join(format!("lbc-cli-test-{}.csv", std::process::id()));
    let out = lbc(&[
        "convergence",
        "--m-list",
        "50,100",
        "--scheme",
        "forward",
        "--steps",
        "100",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(csv.starts_with("scheme,treatment,m,error,condition,in_window,order\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn price_has_a_header_and_one_row_per_node() {
    let out = lbc(&["price", "--m-list", "40", "--steps", "50"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains(','));
    assert_eq!(text.lines().count(), 1 + 42);
}

#[test]
fn price_rejects_several_schemes() {
    let out = lbc(&["price", "--scheme", "forward,central-a"]);
    assert_eq!(out.status.code(), Some(2));
}
