use std::process::ExitCode;

fn main() -> ExitCode {
    leakprobe::cli::main()
}
