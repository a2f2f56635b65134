//! DOT and CSV renderings of a circuit's interaction graph.

use std::fmt::Write;

use gene_circuits::analysis::{feedback_sum, node_strength};
use gene_circuits::io::fmt_float;
use gene_circuits::GeneCircuit;

const ACTIVATION: &str = "forestgreen";
const REPRESSION: &str = "firebrick";
const NEUTRAL: &str = "gray50";
const MAX_WIDTH: f64 = 1.5;
const MIN_WIDTH: f64 = 0.05;

fn sign_color(v: f64) -> &'static str {
    if v > 0.0 {
        ACTIVATION
    } else if v < 0.0 {
        REPRESSION
    } else {
        NEUTRAL
    }
}

/// Edges `j -> i` for every `|W_ij| >= edge_tau` (nonzero), in row-major order.
fn edges(c: &GeneCircuit, edge_tau: f64) -> Vec<(usize, usize, f64)> {
    let n = c.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = c.weight(i, j);
            if w != 0.0 && w.abs() >= edge_tau {
                out.push((j, i, w));
            }
        }
    }
    out
}

/// Node `k` is named `g{k+1}`. Width scales with incoming absolute weight,
/// fill color follows the sign of the signed incoming sum.
pub fn to_dot(c: &GeneCircuit, edge_tau: f64) -> String {
    let strength = node_strength(c);
    let feedback = feedback_sum(c);
    let top = strength.iter().cloned().fold(0.0, f64::max);
    let mut s = String::from("digraph circuit {\n  node [shape=circle, style=filled, fontcolor=white];\n");
    for k in 0..c.n() {
        let width = if top > 0.0 {
            (MAX_WIDTH * strength[k] / top).max(MIN_WIDTH)
        } else {
            MIN_WIDTH
        };
        let _ = writeln!(
            s,
            "  g{id} [label=\"{id}\", width={width:.4}, fillcolor={color}, strength={st:.3}, feedback={fb:.3}];",
            id = k + 1,
            color = sign_color(feedback[k]),
            st = strength[k],
            fb = feedback[k],
        );
    }
    for (from, to, w) in edges(c, edge_tau) {
        let (style, head) = if w > 0.0 { ("solid", "normal") } else { ("dashed", "tee") };
        let _ = writeln!(
            s,
            "  g{} -> g{} [label=\"{w:.3}\", style={style}, arrowhead={head}, color={}];",
            from + 1,
            to + 1,
            sign_color(w),
        );
    }
    s.push_str("}\n");
    s
}

/// One row per exported edge: `from,to,weight,kind` with 1-based node ids.
pub fn to_edge_csv(c: &GeneCircuit, edge_tau: f64) -> String {
    let mut s = String::from("from,to,weight,kind\n");
    for (from, to, w) in edges(c, edge_tau) {
        let kind = if w > 0.0 { "activation" } else { "repression" };
        let _ = writeln!(s, "{},{},{},{kind}", from + 1, to + 1, fmt_float(w));
    }
    s
}
