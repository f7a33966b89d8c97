fn main() -> std::process::ExitCode {
    dynev::cli::main()
}
