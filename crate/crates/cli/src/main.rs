fn main() -> std::process::ExitCode {
    hamel_oc::run(std::env::args_os())
}
