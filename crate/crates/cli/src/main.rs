use clap::Parser;
use qcrit_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { qcrit_cli::error::EXIT_INVALID } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
