fn main() {
    std::process::exit(roadside3d::cli::run(std::env::args_os()));
}
