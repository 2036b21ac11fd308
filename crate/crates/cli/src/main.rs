fn main() {
    std::process::exit(fdde_stab_cli::run(std::env::args_os()));
}
