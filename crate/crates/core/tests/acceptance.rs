//! One test per acceptance criterion. Each prints a PASS/FAIL line.
//! Run with `cargo test -p fanet-aka --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use fanet_aka::acceptance::{self, CriterionResult};
use fanet_aka::par::Execution;

const SEED: u64 = 0;

fn check(r: CriterionResult) {
    println!("{}", r.line());
    assert!(
        r.pass,
        "criterion {} ({}) failed: {}",
        r.id, r.name, r.detail
    );
}

fn timed(budget_secs: u64, f: impl FnOnce() -> CriterionResult) {
    let start = Instant::now();
    let r = f();
    let took = start.elapsed();
    println!(
        "criterion {:>2} runtime {took:.2?} (budget {budget_secs} s)",
        r.id
    );
    assert!(
        took < Duration::from_secs(budget_secs),
        "criterion {} over budget",
        r.id
    );
    check(r);
}

#[test]
fn criterion_01_communication_overhead() {
    timed(1, || acceptance::communication_overhead(SEED));
}

#[test]
fn criterion_02_computation_overhead() {
    timed(1, || acceptance::computation_overhead(SEED));
}

#[test]
fn criterion_03_timing_estimate() {
    check(acceptance::timing_estimate(SEED));
}

#[test]
fn criterion_04_protocol_correctness() {
    timed(30, || {
        acceptance::protocol_correctness(SEED, Execution::Parallel)
    });
}

#[test]
fn criterion_05_tamper_exhaustion() {
    timed(120, || {
        acceptance::tamper_exhaustion(SEED, Execution::Parallel)
    });
}

#[test]
fn criterion_06_replay() {
    check(acceptance::replay_suite(SEED));
}

#[test]
fn criterion_07_knowledge_closure() {
    timed(60, || acceptance::knowledge_closure(SEED));
}

#[test]
fn criterion_08_fuzzy_tolerance() {
    check(acceptance::fuzzy_tolerance(SEED, Execution::Parallel));
}

#[test]
fn criterion_09_lifecycle() {
    check(acceptance::lifecycle(SEED));
}

#[test]
fn criterion_10_dos_bound() {
    timed(10, || acceptance::dos_bound(SEED));
}

#[test]
fn criterion_11_determinism() {
    let (r, _) = acceptance::determinism(SEED, Execution::Parallel);
    check(r);
}
