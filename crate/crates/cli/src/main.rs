fn main() {
    println!("vs: not wired yet");
}
