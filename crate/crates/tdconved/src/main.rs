fn main() {
    std::process::exit(tdconved::cli::run());
}
