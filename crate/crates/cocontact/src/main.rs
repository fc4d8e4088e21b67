fn main() {
    std::process::exit(cocontact::cli::main_entry());
}
