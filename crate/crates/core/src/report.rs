//! Human-facing renderings of a [`ProfileResult`]: a Graphviz call tree and a
//! fixed-width text summary. Both are pure functions of the result.

use std::fmt::Write as _;

use crate::runtime::{ProfileResult, ROOT};
use crate::term::Term;

fn escape(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn comm_cell(calls: &Term, bytes: &Term) -> String {
    let noun = if calls.as_integer().is_some_and(|c| c == 1.into()) {
        "call"
    } else {
        "calls"
    };
    format!("{calls} {noun}, {bytes} B")
}

/// Graphviz text for the calling-context tree, on a single line.
pub fn to_dot(result: &ProfileResult) -> String {
    let mut out = String::from("digraph calltree {");
    for node in &result.nodes {
        let label = if node.id == ROOT {
            format!("{}\npeak: {} B (large: {})", node.name, result.peak_term, result.peak_large)
        } else {
            format!(
                "{}\ncalls: {}\nflops: {} = {}\nalloc: {} B\ncomm: {} calls, {} B",
                node.name,
                node.calls,
                node.flops,
                node.flops.big_o(),
                node.alloc_bytes,
                node.comm_calls,
                node.comm_bytes
            )
        };
        let _ = write!(out, " n{} [label=\"{}\"];", node.id, escape(&label));
    }
    for node in &result.nodes {
        for child in &node.children {
            let _ = write!(out, " n{} -> n{child};", node.id);
        }
    }
    out.push_str(" }\n");
    out
}

const COLUMNS: [&str; 6] = ["function", "calls", "flops", "big-O", "alloc", "comm"];

/// Plain-text report: inputs, totals, per-function table, warnings.
pub fn to_text(result: &ProfileResult) -> String {
    let mut out = String::from("perfscope complexity report\n\ninputs:\n");
    if result.inputs.is_empty() {
        out.push_str("  (none)\n");
    }
    for i in &result.inputs {
        let _ = writeln!(out, "  {} = {} (large {})", i.name, i.small, i.large);
    }
    let flops = result.flops();
    let _ = writeln!(out, "\ntotal flops: {} = {}", flops, flops.big_o());
    let _ = writeln!(out, "peak memory: {} B (large: {})", result.peak_term, result.peak_large);
    let _ = writeln!(out, "allocated:   {} B", result.alloc_bytes_total());
    let _ = writeln!(
        out,
        "comm:        {}\n",
        comm_cell(&result.total_comm_calls(), &result.total_comm_bytes())
    );

    let mut rows: Vec<[String; 6]> = vec![COLUMNS.map(String::from)];
    for f in &result.functions {
        rows.push([
            f.name.clone(),
            f.calls.to_string(),
            f.flops.to_string(),
            f.flops_big_o.to_string(),
            format!("{} B", f.alloc_bytes),
            comm_cell(&f.comm_calls, &f.comm_bytes),
        ]);
    }
    let mut widths = [0usize; 6];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    for (r, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        if r == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            let _ = writeln!(out, "{}", rule.join("-+-"));
        }
    }

    let _ = writeln!(out, "\nwarnings ({}):", result.warnings.len());
    for w in &result.warnings {
        let _ = writeln!(out, "  {w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::Analyzed;
    use crate::interp::{run, RunOptions};

    fn profile(src: &str, inputs: &[(&str, i64, i64)]) -> ProfileResult {
        let a = Analyzed::from_source(src).unwrap();
        run(&a, &RunOptions::profile(inputs)).unwrap()
    }

    fn squash(s: &str) -> String {
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn empty_program_dot() {
        let r = crate::runtime::Context::new(&[], 2).unwrap().finalize().unwrap();
        assert_eq!(
            to_dot(&r),
            "digraph calltree { n0 [label=\"<program>\\npeak: 0 B (large: 0)\"]; }\n"
        );
        let text = to_text(&r);
        assert!(text.contains("function | calls | flops | big-O | alloc | comm"));
        assert!(text.contains("warnings (0):"));
    }

    #[test]
    fn fig1_renderings() {
        let r = profile(include_str!("../tests/fixtures/fig1.pc"), &[("n", 8, 256)]);
        let dot = to_dot(&r);
        assert!(dot.contains("execute\\ncalls: 1\\nflops: n = O(n)\\nalloc: 8*n B\\ncomm: 1 calls, 8 B"));
        assert!(dot.contains("n0 -> n1;"));
        assert!(dot.contains("n1 -> n2;"));
        let text = squash(&to_text(&r));
        assert!(text.contains("execute | 1 | n | O(n) | 8*n B | 1 call, 8 B"), "{text}");
        assert!(text.contains("warnings (1):"));
        assert!(text.contains("branch-divergence"));
    }

    #[test]
    fn two_level_tree() {
        let r = profile("void f() { }\nint main() { f(); f(); return 0; }", &[]);
        let dot = to_dot(&r);
        assert!(dot.contains(" n0 -> n1; n1 -> n2; }"));
        assert_eq!(dot.matches(" -> ").count(), 2);
        assert_eq!(dot.matches("[label=").count(), 3);
    }

    #[test]
    fn ambiguity_warning_has_location() {
        let src = "int main(int n, int m) {\n  int k = 0;\n  if (n < m) k = 1;\n  return k;\n}";
        let r = profile(src, &[("n", 4, 100), ("m", 8, 100)]);
        let text = to_text(&r);
        assert!(text.contains("warnings (1):"));
        assert!(text.contains("3:7: comparison-ambiguity"), "{text}");
    }

    #[test]
    fn labels_are_escaped() {
        assert_eq!(escape("a\"b\\c\nd"), "a\\\"b\\\\c\\nd");
    }
}
