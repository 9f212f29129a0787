//! Runs verification suites and prints their tables.
//!
//! `cargo run --release --example suite -- backends kubota`

fn main() {
    let names: Vec<String> = std::env::args().skip(1).collect();
    let names = if names.is_empty() { minkvec::SUITES.iter().map(|s| s.to_string()).collect() } else { names };
    let q = minkvec::QuadSpec::default();
    let mut ok = true;
    for name in names {
        match minkvec::run_suite(&name, &q) {
            Ok(report) => {
                print!("{}", report.table());
                ok &= report.pass;
            }
            Err(e) => {
                eprintln!("{e}");
                ok = false;
            }
        }
    }
    std::process::exit(if ok { 0 } else { 1 });
}
