use std::process::ExitCode;

fn main() -> ExitCode {
    racism_detect::cli::run()
}
