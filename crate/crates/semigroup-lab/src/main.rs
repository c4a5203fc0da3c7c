fn main() {
    std::process::exit(semigroup_lab::run_cli(std::env::args_os()));
}
