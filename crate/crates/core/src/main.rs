fn main() {
    let code = markov_dilation::cli::run(std::env::args_os());
    std::process::exit(code);
}
