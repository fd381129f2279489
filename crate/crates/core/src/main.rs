use metaplot::cli::{self, Style};

fn main() {
    let code = cli::run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
        Style::from_env(),
    );
    std::process::exit(code);
}
