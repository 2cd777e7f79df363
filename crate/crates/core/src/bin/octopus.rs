fn main() {
    std::process::exit(octopus::bench::cli::cli_main(std::env::args_os()));
}
