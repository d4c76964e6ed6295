fn main() {
    vfdetect_cli::main_with(vfdetect_cli::model_builder::main_run);
}
