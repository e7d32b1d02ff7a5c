//! Reporting helpers for the acceptance gate in `tests/acceptance.rs`.

use std::io::Write;

/// Write one `PASS`/`FAIL` line straight to stderr, past the test harness capture.
pub fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance] criterion {criterion:>2} {verdict}: {title}; {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}
