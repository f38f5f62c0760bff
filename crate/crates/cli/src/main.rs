use std::process::ExitCode;

fn main() -> ExitCode {
    refineloc_cli::run()
}
