//! Prints the size table of every built-in domain.
//!
//! `cargo run --example describe_domains`

use bgn::env::{Domain, DomainId};

fn main() -> anyhow::Result<()> {
    println!("{:<16} {:>5} {:>5} {:>5} {:>3} {:>5} {:>5} {:>4}", "domain", "|X|", "|Y|", "|S|", "|A|", "|Ω|", "γ", "len");
    for id in DomainId::ALL {
        let d = Domain::builtin(id)?.describe();
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        println!(
            "{:<16} {:>5} {:>5} {:>5} {:>3} {:>5} {:>5} {:>4}",
            d.domain,
            opt(d.x),
            opt(d.y),
            d.s,
            d.a,
            d.omega,
            d.gamma,
            d.max_episode_length
        );
        for dev in &d.deviations {
            println!("    deviation: {dev}");
        }
    }
    Ok(())
}
