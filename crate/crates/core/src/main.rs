use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = fermi_modes::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
