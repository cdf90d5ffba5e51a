use clap::Parser;

fn main() {
    let cli = match rainrate::cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { rainrate::error::ExitClass::Usage as i32 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr());
    if let Err(e) = rainrate::cli::run(cli, &mut out, &mut err) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
