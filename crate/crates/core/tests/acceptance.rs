//! One PASS/FAIL line per acceptance criterion. Tolerances are the pinned
//! constants in `resonance_core::verify`. Runs without the libtest harness so
//! the table shows up in plain `cargo test` output.

use resonance_core::verify::{self, VerifyOptions, CRITERIA};

const SEED: u64 = 20240601;

const TITLES: [&str; 10] = [
    "bracket table",
    "reduced-space relations",
    "chart validity",
    "averaging oracle",
    "homological residual",
    "second-order audit",
    "equilibria soundness",
    "cross-formalism agreement",
    "dynamics consistency",
    "normal-form predictivity",
];

fn acceptance() -> bool {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let report = verify::run(&VerifyOptions { seed: SEED, workers, ..Default::default() }).unwrap();
    for c in CRITERIA {
        let verdict = if report.criterion_passed(c) { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {c}: {}", TITLES[c as usize - 1]);
        for s in report.suites.iter().filter(|s| s.criterion == c) {
            println!(
                "    {:<28} n={:<5} max={:.3e} tol={:.0e}{}",
                s.name,
                s.samples,
                s.max_residual,
                s.tolerance,
                s.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
            );
        }
    }
    if !report.passed {
        println!("failed suites: {:?}", report.failed_suites());
    }
    report.passed
}

fn flipped_table_entry_is_caught() -> bool {
    let opts = VerifyOptions { seed: SEED, workers: 2, criteria: vec![1], fault: Some((0, 1)) };
    let report = verify::run(&opts).unwrap();
    !report.passed && report.failed_suites() == vec!["bracket_table"]
}

fn report_ignores_worker_count() -> bool {
    let run = |workers| verify::run(&VerifyOptions { seed: 7, workers, criteria: vec![1, 2, 7], fault: None }).unwrap();
    run(1) == run(3)
}

fn main() {
    let mut ok = acceptance();
    for (name, check) in [
        ("flipped table entry is caught", flipped_table_entry_is_caught as fn() -> bool),
        ("report ignores worker count", report_ignores_worker_count),
    ] {
        let pass = check();
        println!("{} harness: {name}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    }
    if !ok {
        std::process::exit(1);
    }
}
