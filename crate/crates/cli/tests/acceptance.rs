//! Acceptance matrix: one line per criterion, nonzero exit on any failure.

use contact_forge_cli::report::sha256_hex;
use contact_forge_cli::suite::{run_suite, NAMES};
use contact_forge_cli::{thread_pool, ACCEPTANCE_SCENE};

const SEED: u64 = 20261014;

fn main() {
    let pool = thread_pool().expect("thread pool");
    let report = run_suite(SEED, ACCEPTANCE_SCENE.as_bytes(), &pool);
    assert_eq!(report.checks.len(), NAMES.len(), "one check per criterion");
    println!("acceptance seed={SEED} scene={}", sha256_hex(ACCEPTANCE_SCENE.as_bytes()));
    let mut failed = 0;
    for (check, name) in report.checks.iter().zip(NAMES) {
        assert_eq!(check.name, name);
        let ok = check.passed();
        failed += usize::from(!ok);
        println!(
            "{} {}  residual={:e} tol={:e}",
            if ok { "PASS" } else { "FAIL" },
            check.name,
            check.residual,
            check.tolerance
        );
        if !ok {
            println!("  witnesses: {}", check.witnesses);
        }
    }
    println!("acceptance: {} passed, {failed} failed", NAMES.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
