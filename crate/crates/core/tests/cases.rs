use dcw_core::cli::{list_cases, run_acceptance, run_case, CaseConfig};
use std::process::Command;

fn small(id: &str) -> CaseConfig {
    let mut cfg = CaseConfig::for_case(id).unwrap();
    cfg.n_samples = 8;
    cfg
}

#[test]
fn every_registered_case_passes() {
    for info in list_cases() {
        let report = run_case(&small(info.id)).unwrap();
        assert!(report.passed, "{}", report.to_json());
        for v in &report.verdicts {
            assert!(!v.citation.is_empty() && v.tolerance.is_finite());
        }
    }
}

#[test]
fn case_reports_pin_moduli_dimensions() {
    let mut cfg = small("cp1-cpn-rigidity");
    cfg.k = 3;
    assert_eq!(run_case(&cfg).unwrap().computed["moduli_dim"], 0);
    assert_eq!(run_case(&small("quadric-deg1")).unwrap().computed["moduli_dim"], 0);
    let deg2 = run_case(&small("quadric-deg2")).unwrap();
    assert_eq!(deg2.computed["moduli_dim"], 2);
    assert_eq!(deg2.computed["disk_grid"]["misclassified"], 0);
}

#[test]
fn reports_are_deterministic() {
    let a = run_case(&small("quadric-deg2-boundary")).unwrap().to_json();
    let b = run_case(&small("quadric-deg2-boundary")).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn module_errors_become_failed_reports() {
    let mut cfg = small("quadric-deg2");
    cfg.k = 3;
    let report = run_case(&cfg).unwrap();
    assert!(!report.passed);
    let mut cfg = small("standard-verify");
    cfg.fd_step = 0.05;
    assert!(!run_case(&cfg).unwrap().passed);
}

#[test]
fn coarse_step_fails_acceptance() {
    let summary = run_acceptance(42, 0.05);
    assert!(summary.criteria.len() >= 10);
    assert!(!summary.passed);
    assert!(!summary.criteria[5].pass);
}

#[test]
fn binary_round_trip() {
    let exe = env!("CARGO_BIN_EXE_dcw");
    let dir = std::env::temp_dir().join(format!("dcw-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let list = Command::new(exe).arg("list").output().unwrap();
    assert!(list.status.success());
    assert_eq!(list.stdout, Command::new(exe).arg("list").output().unwrap().stdout);

    let run = |out: &str| {
        let status = Command::new(exe)
            .args(["case", "quadric-deg1", "--samples", "4", "--no-timestamp", "--out"])
            .arg(dir.join(out))
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(dir.join(out)).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));

    let grid = dir.join("grid.csv");
    let status = Command::new(exe).args(["grid", "--case", "quadric-deg2", "--resolution", "0.1", "--out"]).arg(&grid).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(csv.lines().count(), 1 + 25 * 25);

    let bad = Command::new(exe).args(["case", "no-such-case"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let bad = Command::new(exe).args(["case", "quadric-deg1", "--samples", "0"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}
