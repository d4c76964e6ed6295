fn main() {
    vfdetect_cli::main_with(vfdetect_cli::application::main_run);
}
