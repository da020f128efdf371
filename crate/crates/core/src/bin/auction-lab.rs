fn main() -> std::process::ExitCode {
    auction_lab::cli::main()
}
