use std::process::ExitCode;

fn main() -> ExitCode {
    adbs::cli::main()
}
