use std::process::ExitCode;

fn main() -> ExitCode {
    srb_cli::main_with_args(std::env::args_os())
}
