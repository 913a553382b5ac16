fn main() {
    std::process::exit(layerspec_lab::run(std::env::args_os()));
}
