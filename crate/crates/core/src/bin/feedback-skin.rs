fn main() -> std::process::ExitCode {
    feedback_skin::cli::main()
}
