//! Parses expressions from the command line (or a built-in list), prints
//! their canonical form and reports syntax errors with their byte position.

use bernoulli_factory::expr::parse_expression;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if args.is_empty() {
        [
            "sqrt",
            "power:a=0.5",
            "compose(sqrt, sqrt, order=32)",
            "convex(power:a=1/2,entropy,alpha=0.3)",
            "scale(prod(sqrt,complement(entropy)),alpha=2/3)",
            "finite:[1/4, 1/2, 1/4]",
            "power:a=1.5",
            "pc(sqrt,)",
        ]
        .map(String::from)
        .to_vec()
    } else {
        args
    };
    for text in &inputs {
        match parse_expression(text) {
            Ok(e) => println!("{text:<50} -> {e}"),
            Err(err) => println!("{text:<50} !! {err}"),
        }
    }
}
