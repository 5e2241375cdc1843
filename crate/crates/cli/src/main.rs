use clap::Parser;
use contact_forge_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let (report, code) = run(&cli);
    if let Some(r) = report {
        for c in &r.checks {
            println!("{:<6} {}  residual={:e} tol={:e}", if c.passed() { "PASS" } else { "FAIL" }, c.name, c.residual, c.tolerance);
        }
    }
    std::process::exit(code);
}
