fn main() {
    std::process::exit(kgroups_cli::run(std::env::args_os()));
}
