fn main() -> std::process::ExitCode {
    pldpch_tools::app::main(std::env::args_os())
}
