use std::process::ExitCode;

fn main() -> ExitCode {
    qexp::cli::main_entry()
}
