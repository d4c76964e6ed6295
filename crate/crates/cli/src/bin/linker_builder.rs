fn main() {
    vfdetect_cli::main_with(vfdetect_cli::linker_builder::main_run);
}
