fn main() {
    vfdetect_cli::main_with(vfdetect_cli::synthetic::main_run);
}
