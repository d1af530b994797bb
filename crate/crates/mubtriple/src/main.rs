use std::process::ExitCode;

fn main() -> ExitCode {
    mubtriple::cli::run()
}
