use super::model::PomdpModel;
use std::fmt::Write;

/// Writes `model` in the `.POMDP` dialect accepted by [`super::parse_pomdp`].
///
/// Every nonzero cell is written exactly once. Floats use Rust's shortest
/// round-trip formatting, so parsing the output reproduces the model bit for
/// bit. Reward blocks that are constant over `(s', o)` or over `o` collapse
/// to wildcard lines.
pub fn serialize_pomdp(model: &PomdpModel) -> String {
    let ns = model.num_states();
    let na = model.num_actions();
    let no = model.num_observations();
    let mut out = String::new();

    writeln!(out, "discount: {}", model.discount).unwrap();
    writeln!(out, "values: reward").unwrap();
    write_space(&mut out, "states", ns, &model.state_names);
    write_space(&mut out, "actions", na, &model.action_names);
    write_space(&mut out, "observations", no, &model.observation_names);

    out.push_str("start:");
    for p in &model.start {
        write!(out, " {p}").unwrap();
    }
    out.push('\n');

    let s_ = |i: usize| model.state_label(i);
    let a_ = |i: usize| model.action_label(i);
    let o_ = |i: usize| model.observation_label(i);

    out.push('\n');
    for a in 0..na {
        for s in 0..ns {
            for (n, &p) in model.transition_row(s, a).iter().enumerate() {
                if p != 0.0 {
                    writeln!(out, "T: {} : {} : {} {p}", a_(a), s_(s), s_(n)).unwrap();
                }
            }
        }
    }
    out.push('\n');
    for a in 0..na {
        for n in 0..ns {
            for (o, &p) in model.observation_row(n, a).iter().enumerate() {
                if p != 0.0 {
                    writeln!(out, "O: {} : {} : {} {p}", a_(a), s_(n), o_(o)).unwrap();
                }
            }
        }
    }
    out.push('\n');
    for a in 0..na {
        for s in 0..ns {
            let first = model.reward(s, a, 0, 0);
            let block_constant = (0..ns)
                .all(|n| (0..no).all(|o| model.reward(s, a, n, o).to_bits() == first.to_bits()));
            if block_constant {
                if first != 0.0 {
                    writeln!(out, "R: {} : {} : * : * {first}", a_(a), s_(s)).unwrap();
                }
                continue;
            }
            for n in 0..ns {
                let r0 = model.reward(s, a, n, 0);
                if (0..no).all(|o| model.reward(s, a, n, o).to_bits() == r0.to_bits()) {
                    if r0 != 0.0 {
                        writeln!(out, "R: {} : {} : {} : * {r0}", a_(a), s_(s), s_(n)).unwrap();
                    }
                    continue;
                }
                for o in 0..no {
                    let r = model.reward(s, a, n, o);
                    if r != 0.0 {
                        writeln!(out, "R: {} : {} : {} : {} {r}", a_(a), s_(s), s_(n), o_(o))
                            .unwrap();
                    }
                }
            }
        }
    }
    if model.has_terminal_transitions() {
        out.push('\n');
        for a in 0..na {
            for s in 0..ns {
                for n in 0..ns {
                    if model.is_terminal(s, a, n) {
                        writeln!(out, "reset: {} : {} : {}", a_(a), s_(s), s_(n)).unwrap();
                    }
                }
            }
        }
    }
    out
}

fn write_space(out: &mut String, key: &str, n: usize, names: &Option<Vec<String>>) {
    match names {
        Some(names) => writeln!(out, "{key}: {}", names.join(" ")).unwrap(),
        None => writeln!(out, "{key}: {n}").unwrap(),
    }
}
