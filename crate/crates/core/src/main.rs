use std::process::ExitCode;

fn main() -> ExitCode {
    match relaymux::cli::parse_args(std::env::args_os()) {
        Ok(cli) => relaymux::cli::execute(cli),
        Err(e) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
