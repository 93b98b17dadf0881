use dcw_core::cli::run_acceptance;
use std::process::ExitCode;

fn main() -> ExitCode {
    // libtest flags such as --nocapture are passed through; ignore them.
    let summary = run_acceptance(42, 1e-3);
    for line in summary.lines() {
        println!("{line}");
    }
    let failed = summary.criteria.iter().filter(|c| !c.pass).count();
    println!("acceptance: {} passed, {failed} failed", summary.criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
