fn main() {
    std::process::exit(manet_cluster::cli::main_with(std::env::args_os()));
}
