fn main() -> std::process::ExitCode {
    slowcert::cli::main()
}
