//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits
//! non-zero when any criterion fails. An optional argument filters criteria
//! by substring.

#[path = "../common/mod.rs"]
mod common;

mod carrier;
mod engine;
mod federation;
mod lifecycle;
mod world;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

type Check = fn() -> Result<String, String>;

const CRITERIA: &[(&str, Check)] = &[
    ("uri_stability", lifecycle::uri_stability),
    ("semantic_change_contract", lifecycle::semantic_contract),
    ("no_deletion", lifecycle::no_deletion),
    ("classification_table", engine::classification_table),
    ("patch_round_trip", engine::patch_round_trip),
    ("replay_determinism", engine::replay_determinism),
    ("lossless_carrier", carrier::lossless_carrier),
    ("crash_safety", carrier::crash_safety),
    ("feed_exactness", federation::feed_exactness),
    ("token_single_use", lifecycle::token_single_use),
    ("harvest_convergence", federation::harvest_convergence),
    ("non_hosted_ingestion", federation::non_hosted_ingestion),
];

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in CRITERIA {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.1}s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
