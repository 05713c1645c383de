fn main() -> std::process::ExitCode {
    dform::cli::main()
}
