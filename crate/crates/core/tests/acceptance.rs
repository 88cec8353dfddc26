//! Acceptance criteria, one PASS/FAIL line per criterion.
//!
//! Built without the libtest harness so the table always prints; a failing
//! criterion makes the process exit nonzero.

use std::time::{Duration, Instant};

use statdist::selftest::{criterion_title, run_criterion, CRITERIA};

fn time_limit(k: u8) -> Option<Duration> {
    match k {
        1 => Some(Duration::from_secs(10)),
        4 => Some(Duration::from_secs(5)),
        6 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

fn main() {
    let mut failures = Vec::new();
    for k in 1..=CRITERIA {
        let start = Instant::now();
        let outcome = run_criterion(k);
        let elapsed = start.elapsed();
        let (pass, detail) = match &outcome {
            Ok(r) => {
                let failed: Vec<String> = r.failed_checks().iter().map(|c| c.line()).collect();
                let slow = time_limit(k).filter(|&limit| elapsed > limit);
                let mut notes = failed.clone();
                if let Some(limit) = slow {
                    notes.push(format!("runtime {elapsed:.2?} over {limit:?}"));
                }
                let summary = r.checks.iter().map(|c| c.line()).collect::<Vec<_>>().join("; ");
                (notes.is_empty(), if notes.is_empty() { summary } else { notes.join("; ") })
            }
            Err(e) => (false, format!("error: {e}")),
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {k:>2} ({}) [{elapsed:.2?}]: {detail}", criterion_title(k));
        if !pass {
            failures.push(k);
        }
    }
    if failures.is_empty() {
        println!("acceptance: {CRITERIA} of {CRITERIA} criteria passed");
    } else {
        eprintln!("acceptance: failed criteria {failures:?}");
        std::process::exit(1);
    }
}
