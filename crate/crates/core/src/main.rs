use clap::Parser;

fn main() {
    let cli = fdsolve::cli::Cli::parse();
    let code = fdsolve::cli::run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
