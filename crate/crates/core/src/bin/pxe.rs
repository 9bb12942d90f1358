use clap::Parser;
use product_expectation::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
