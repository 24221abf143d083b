use std::io;

fn main() {
    let code = geotax_cli::run(
        std::env::args_os(),
        std::env::var(geotax_cli::FORMAT_ENV).ok(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
