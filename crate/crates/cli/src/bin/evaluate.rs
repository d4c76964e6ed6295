fn main() {
    vfdetect_cli::main_with(vfdetect_cli::evaluate::main_run);
}
