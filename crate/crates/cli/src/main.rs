use clap::Parser;
use qex_cli::Cli;

fn main() {
    let cli = Cli::parse();
    let result = qex_cli::run(&cli).and_then(|text| qex_cli::emit(&text, qex_cli::output_path(&cli)));
    if let Err(e) = result {
        eprintln!("qex: {e}");
        std::process::exit(e.exit_code());
    }
}
