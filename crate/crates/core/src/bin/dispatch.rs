fn main() {
    std::process::exit(iid_dispatch::cli::main());
}
