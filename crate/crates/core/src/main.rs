fn main() {
    std::process::exit(lppl_zipf::cli::run())
}
