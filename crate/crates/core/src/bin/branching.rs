fn main() { std::process::exit(cadet_branching::cli::main_exit()); }
