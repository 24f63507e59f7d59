//! Acceptance suite: runs every release criterion at its pinned tolerance
//! and prints one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use relay_coverage::validate::{run_suite, Suite};

#[test]
fn acceptance_criteria() {
    let results = run_suite(Suite::Full).expect("suite runs");
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(
        failed.is_empty(),
        "criteria failed: {failed:?}\n{}",
        results
            .iter()
            .map(|r| r.line())
            .collect::<Vec<_>>()
            .join("\n")
    );
}
