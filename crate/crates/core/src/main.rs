fn main() {
    std::process::exit(bernoulli_factory::cli::main());
}
