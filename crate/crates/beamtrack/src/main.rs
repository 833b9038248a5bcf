fn main() {
    std::process::exit(beamtrack::cli::cli_main(std::env::args_os()));
}
