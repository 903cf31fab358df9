fn main() {
    std::process::exit(poisson_chaos::cli::run_from(std::env::args_os()));
}
