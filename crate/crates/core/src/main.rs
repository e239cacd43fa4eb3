use std::process::exit;

fn main() {
    exit(sklnb::cli::run(std::env::args_os()));
}
