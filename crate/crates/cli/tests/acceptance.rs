//! Acceptance target: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use twoscale_cli::config::DEFAULT_SEED;
use twoscale_cli::verify::{run_criterion, VerifyOptions, CRITERIA};

fn main() -> ExitCode {
    let opts = VerifyOptions { seed: DEFAULT_SEED, threads: 0 };
    let mut failed = 0;
    for (id, title) in CRITERIA {
        let t = Instant::now();
        match run_criterion(id, &opts) {
            Ok(c) => {
                failed += usize::from(!c.pass);
                println!("{c} [{:.1}s]", t.elapsed().as_secs_f64());
            }
            Err(e) => {
                failed += 1;
                println!("criterion {id:>2} FAIL: {title}; error: {e}");
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
