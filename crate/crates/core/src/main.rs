use std::io::Write;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let started = Instant::now();
    let outcome = fpproc::cli::run(&args);
    // Reports stay byte-identical on stdout; timing goes to stderr.
    print!("{}", outcome.stdout);
    if !outcome.stderr.is_empty() {
        eprint!("{}", outcome.stderr);
    }
    if outcome.exit_code != 2 {
        eprintln!("elapsed_ms: {}", started.elapsed().as_millis());
    }
    let _ = std::io::stdout().flush();
    std::process::exit(outcome.exit_code);
}
