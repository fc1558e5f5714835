fn main() {
    println!("envave");
}
