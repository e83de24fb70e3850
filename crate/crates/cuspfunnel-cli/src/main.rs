use clap::Parser;

fn main() {
    let cli = cuspfunnel_cli::Cli::parse();
    match cuspfunnel_cli::execute(&cli) {
        Ok(artifacts) => {
            for name in artifacts {
                println!("wrote {name}");
            }
        }
        Err(e) => {
            eprintln!("{}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
