fn main() -> std::process::ExitCode {
    chaowork::cli::main()
}
