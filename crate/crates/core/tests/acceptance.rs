//! Runs every acceptance suite and prints one line per criterion. Exits
//! nonzero if any criterion fails.

use std::process::ExitCode;

fn main() -> ExitCode {
    let only = std::env::args().skip(1).find(|a| !a.starts_with('-')).unwrap_or_else(|| "all".into());
    let reports = match fedchi::harness::run_acceptance(&only) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance: {e}");
            return ExitCode::from(2);
        }
    };
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", reports.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
