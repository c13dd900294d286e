use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellular-ia"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn bounds_report() {
    let v = stdout_json(&bin(&["bounds", "--G", "2", "--K", "3", "--M", "2", "--N", "3", "--d", "1"]));
    assert_eq!(v["decomposition_inner"], "2/3");
    assert_eq!(v["closed_form_optimal"], "2/3");
    assert_eq!(v["demand"]["proper"], false);
}

#[test]
fn bounds_grid_csv() {
    let out = bin(&["bounds", "--G", "2", "--K", "2", "--grid", "--Mmax", "3", "--Nmax", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "G,K,M,N,gamma,inner,xnet_outer,prior_outer,proper_limit,mac_bc,closed_form"
    );
    assert_eq!(lines.count(), 9);
    assert!(text.contains("\n2,2,1,1,1,1/3,1/3,1/3,2/5,1/2,1/3\n"));
}

#[test]
fn usap_dump_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let bf = dir.path().join("bf.json");
    let ch = dir.path().join("ch.json");
    let v = stdout_json(&bin(&[
        "usap",
        "--G", "3", "--K", "2", "--M", "3", "--N", "5", "--d", "1",
        "--seed", "4",
        "--dump-beamformers", bf.to_str().unwrap(),
        "--dump-channels", ch.to_str().unwrap(),
    ]));
    assert_eq!(v["status"], "Success");
    let r = stdout_json(&bin(&["verify", "--channels", ch.to_str().unwrap(), "--beamformers", bf.to_str().unwrap()]));
    assert_eq!(r["pass"], true);

    // Beamformers checked against different channels must fail.
    let other = dir.path().join("other.json");
    let out = bin(&["channels", "--G", "3", "--K", "2", "--M", "3", "--N", "5", "--seed", "99", "--out", other.to_str().unwrap()]);
    assert!(out.status.success());
    let out = bin(&["verify", "--channels", other.to_str().unwrap(), "--beamformers", bf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usap_empty_nullspace() {
    let v = stdout_json(&bin(&["usap", "--G", "3", "--K", "2", "--M", "3", "--N", "4", "--d", "1"]));
    assert_eq!(v["status"], "EmptyNullspace");
    assert_eq!(v["diagnostics"]["rows"], 24);
    assert_eq!(v["diagnostics"]["cols"], 18);
}

#[test]
fn structured_design_json() {
    let v = stdout_json(&bin(&["structured", "--K", "2", "--M", "2", "--N", "3", "--seed", "1"]));
    assert_eq!(v["achieved_dof"], "1");
    assert_eq!(v["report"]["pass"], true);
}

#[test]
fn sweep_resume_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let csv2 = dir.path().join("b.csv");
    let ckpt = dir.path().join("ck.jsonl");
    let args = |out: &str| {
        vec![
            "sweep".to_string(), "--G".into(), "3".into(), "--K".into(), "2".into(),
            "--Mmax".into(), "6".into(), "--Nmax".into(), "7".into(), "--seeds".into(), "2".into(),
            "--out".into(), out.into(), "--resume".into(), ckpt.to_str().unwrap().into(),
        ]
    };
    let a = args(csv.to_str().unwrap());
    let out = bin(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = fs::read_to_string(&ckpt).unwrap().lines().count();
    let b = args(csv2.to_str().unwrap());
    assert!(bin(&b.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    // The rerun resumes everything and appends nothing.
    assert_eq!(fs::read_to_string(&ckpt).unwrap().lines().count(), lines);
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&csv2).unwrap());

    let out = bin(&["boundary", "--in", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("gamma_num,gamma_den,dN_num,dN_den,gamma,dN\n"));
    assert!(text.contains("\n3,5,1,5,"));
}

#[test]
fn bounds_curves_tangency_row() {
    let out = bin(&["bounds-curves", "--G", "2", "--K", "4", "--max-den", "6", "--gamma-max", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("1,2,")).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    // decomposition and proper columns agree at the tangency ratio
    assert_eq!(cols[3], cols[4]);
}

#[test]
fn bad_scheme_is_rejected() {
    let out = bin(&["sweep", "--G", "3", "--K", "2", "--scheme", "nope", "--out", "/dev/null"]);
    assert!(!out.status.success());
}
