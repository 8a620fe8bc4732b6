fn main() {
    std::process::exit(bilqctrl::cli::run(std::env::args_os()));
}
