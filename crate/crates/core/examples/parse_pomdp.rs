//! Parses a `.POMDP` description, reports problems and writes it back out.
//!
//! `cargo run --example parse_pomdp -- [path]` (defaults to a built-in tiger problem)

use bgn::pomdp::{parse_pomdp, serialize_pomdp, validate_model};

const TIGER: &str = "\
discount: 0.95
values: reward
states: tiger-left tiger-right
actions: listen open-left open-right
observations: hear-left hear-right
start: uniform

T: listen identity
T: open-left uniform
T: open-right uniform

O: listen
0.85 0.15
0.15 0.85
O: open-left uniform
O: open-right uniform

R: listen : * : * : * -1
R: open-left : tiger-left : * : * -100
R: open-left : tiger-right : * : * 10
R: open-right : tiger-left : * : * 10
R: open-right : tiger-right : * : * -100
";

fn main() -> anyhow::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => TIGER.to_string(),
    };
    let model = parse_pomdp(&text)?;
    println!(
        "|S| = {}, |A| = {}, |Ω| = {}, γ = {}",
        model.num_states(),
        model.num_actions(),
        model.num_observations(),
        model.discount
    );
    let diagnostics = validate_model(&model);
    if diagnostics.is_empty() {
        println!("model is valid");
    } else {
        println!("{diagnostics}");
    }
    let out = serialize_pomdp(&model);
    let again = parse_pomdp(&out)?;
    assert_eq!(serialize_pomdp(&again), out);
    println!("\n{out}");
    Ok(())
}
