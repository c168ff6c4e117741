fn main() {
    std::process::exit(armlab_main::run());
}

mod armlab_main {
    pub fn run() -> i32 {
        0
    }
}
