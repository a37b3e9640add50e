//! One line per acceptance criterion; the test fails if any criterion does.

use kppfront::acceptance::run_all;

#[test]
fn acceptance_suite() {
    let results = run_all();
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria pass", results.len() - failed.len(), results.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
