use std::io::Write;

fn main() {
    if let Err(e) = murmurations::cli::configure_threads() {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = murmurations::cli::run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
