fn main() -> std::process::ExitCode {
    nowcast::cli::main()
}
