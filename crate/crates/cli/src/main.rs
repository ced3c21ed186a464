use clap::Parser;

use ehfb_cli::{run, Cli};

fn main() {
    // usage errors count as validation failures; help and version exit 0
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(&cli));
}
