fn main() -> std::process::ExitCode {
    steklov::cli::main_entry()
}
