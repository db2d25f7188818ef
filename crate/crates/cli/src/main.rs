use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = jpa_cli::run(std::env::args_os());
    if let Some(text) = &outcome.message {
        print!("{text}");
    }
    if let Some(record) = &outcome.record {
        let mut stdout = std::io::stdout().lock();
        let _ = stdout.write_all(record.to_json().as_bytes());
    }
    if let Some(err) = &outcome.error {
        match err {
            jpa_cli::CliError::Usage(text) => eprint!("{text}"),
            _ => eprintln!("{}", err.to_json()),
        }
    }
    ExitCode::from(outcome.code as u8)
}
