//! Plain-text export of extensive-form games in the `.efg` v2 format.
//!
//! One line per node in prefix order. Information sets are numbered per
//! player in first-encounter order; every chance node gets its own number.
//! Terminals with equal payoff vectors share an outcome number. Numbers
//! print as integers or exact rationals when possible, otherwise as
//! decimals with seventeen significant digits, so equal games export to
//! byte-identical text.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::efg::{Efg, EfgNodeKind};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' {
            out.push('"');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Largest integer magnitude exactly representable in an f64.
const EXACT_INT: f64 = 9_007_199_254_740_992.0;

/// Best rational a/b with b at most one billion whose f64 value is exactly
/// `x` (x positive, non-integral), by continued fractions.
fn rational_of(x: f64) -> Option<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut a = x;
    for _ in 0..64 {
        if !(0.0..EXACT_INT).contains(&a) {
            return None;
        }
        let ai = a as u64;
        let p2 = ai.checked_mul(p1)?.checked_add(p0)?;
        let q2 = ai.checked_mul(q1)?.checked_add(q0)?;
        if q2 > 1_000_000_000 {
            return None;
        }
        if q2 > 0 && p2 as f64 / q2 as f64 == x {
            return Some((p2, q2));
        }
        let frac = a - ai as f64;
        if frac == 0.0 {
            return None;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        a = 1.0 / frac;
    }
    None
}

/// Renders a probability or payoff: plain integer, exact rational, or a
/// seventeen-significant-digit decimal.
pub fn format_number(v: f64) -> String {
    if v.abs() <= EXACT_INT && v == (v as i64) as f64 {
        return format!("{}", v as i64);
    }
    let magnitude = v.abs();
    if v.is_finite() {
        if let Some((a, b)) = rational_of(magnitude) {
            return if v < 0.0 { format!("-{a}/{b}") } else { format!("{a}/{b}") };
        }
    }
    format!("{v:.16e}")
}

/// Serializes a game to `.efg` text. The output is a pure function of the
/// game: exporting twice yields identical bytes.
pub fn export_efg_text(game: &Efg) -> String {
    let mut out = String::new();
    out.push_str("EFG 2 R ");
    out.push_str(&quote(&game.title));
    out.push_str(" {");
    for agent in &game.agents {
        out.push(' ');
        out.push_str(&quote(agent));
    }
    out.push_str(" }\n");

    let mut chance_sets = 0usize;
    let mut player_sets: Vec<BTreeMap<usize, usize>> =
        game.agents.iter().map(|_| BTreeMap::new()).collect();
    let mut outcomes: Vec<&Vec<f64>> = Vec::new();

    for id in game.prefix_order() {
        let node = &game.nodes[id.0];
        match &node.kind {
            EfgNodeKind::Chance { actions, probs, .. } => {
                chance_sets += 1;
                out.push_str(&format!("c {} {} \"\" {{", quote(&node.label), chance_sets));
                for (action, prob) in actions.iter().zip(probs) {
                    out.push_str(&format!(" {} {}", quote(action), format_number(*prob)));
                }
                out.push_str(" } 0\n");
            }
            EfgNodeKind::Personal { iset, .. } => {
                let set = &game.isets[*iset];
                let player = set.owner.0;
                let next = player_sets[player].len() + 1;
                let number = *player_sets[player].entry(*iset).or_insert(next);
                out.push_str(&format!(
                    "p {} {} {} \"\" {{",
                    quote(&node.label),
                    player + 1,
                    number
                ));
                for action in &set.actions {
                    out.push_str(&format!(" {}", quote(action)));
                }
                out.push_str(" } 0\n");
            }
            EfgNodeKind::Terminal { payoffs } => {
                let number = match outcomes.iter().position(|o| *o == payoffs) {
                    Some(i) => i + 1,
                    None => {
                        outcomes.push(payoffs);
                        outcomes.len()
                    }
                };
                out.push_str(&format!("t {} {} \"\" {{ ", quote(&node.label), number));
                let rendered: Vec<String> =
                    payoffs.iter().map(|p| format_number(*p)).collect();
                out.push_str(&rendered.join(", "));
                out.push_str(" }\n");
            }
        }
    }
    out
}
