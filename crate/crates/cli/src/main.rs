fn main() {
    std::process::exit(ecodispatch_cli::dispatch_command(std::env::args_os()));
}
