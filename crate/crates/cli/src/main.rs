use clap::Parser;

fn main() {
    env_logger::init();
    let cli = match syncstab::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = syncstab::execute(cli) {
        log::debug!("{e:?}");
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
