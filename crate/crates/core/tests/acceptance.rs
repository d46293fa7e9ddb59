//! Acceptance run: every cross-check, one line each.
//!
//! Tolerances live next to the checks in `chemostat_core::crosscheck`. The
//! checks in [`KNOWN_RED`] fail for reasons documented in the README; this
//! target fails only when some other check fails, so a regression is caught
//! while the known failures stay on display.

use std::process::ExitCode;
use std::time::Instant;

use chemostat_core::crosscheck::{run_check, CHECK_COUNT};

/// 4: the two-species rate approaches its fast-switching limit like 1/lambda
///    and is still 1.1e-3 away at lambda = 1e4.
/// 5: the one-species rate is not monotone in lambda for a few random sets.
/// 8: in the narrow switched coexistence region, persistent species spend long
///    stretches far below the extinction level, so terminal snapshots disagree.
const KNOWN_RED: [u8; 3] = [4, 5, 8];

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    let mut fixed = Vec::new();
    for id in 1..=CHECK_COUNT {
        let t = Instant::now();
        let report = run_check(id);
        println!("{report}  ({:.1}s)", t.elapsed().as_secs_f64());
        match (report.passed, KNOWN_RED.contains(&id)) {
            (false, false) => unexpected.push(id),
            (true, true) => fixed.push(id),
            _ => {}
        }
    }
    let failed = (1..=CHECK_COUNT).filter(|id| KNOWN_RED.contains(id) && !fixed.contains(id)).count() + unexpected.len();
    println!("acceptance: {} passed, {failed} failed (known red: {KNOWN_RED:?})", CHECK_COUNT as usize - failed);
    if !fixed.is_empty() {
        println!("acceptance: known-red checks now pass: {fixed:?}");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
