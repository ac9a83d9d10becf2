fn main() {
    std::process::exit(ctmc_trunc::run(std::env::args_os()));
}
