fn main() {
    std::process::exit(densflow_cli::execute(std::env::args_os()));
}
