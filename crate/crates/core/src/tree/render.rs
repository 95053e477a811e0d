//! Indented text rendering of a tree: each internal node prints its left
//! condition, the left subtree, its right condition, then the right subtree.
//! Nodes are numbered 1, 2k, 2k+1.

use std::fmt::Write;

use super::{Summary, Tree};
use crate::splitter::SplitRule;

impl Tree {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(0, 1, 0, &mut out);
        out
    }

    fn render_node(&self, id: usize, label: u64, indent: usize, out: &mut String) {
        let node = &self.nodes[id];
        let pad = "  ".repeat(indent);
        match &node.split {
            Some(s) => {
                let (l, r) = self.conditions(&s.rule);
                let _ = writeln!(out, "{pad}Node {label}: {l}");
                self.render_node(s.left, 2 * label, indent + 1, out);
                let _ = writeln!(out, "{pad}Node {label}: {r}");
                self.render_node(s.right, 2 * label + 1, indent + 1, out);
            }
            None => {
                let _ = writeln!(
                    out,
                    "{pad}Node {label}: terminal, n = {}, {}",
                    node.n,
                    self.describe(&node.summary)
                );
            }
        }
    }

    fn describe(&self, summary: &Summary) -> String {
        match summary {
            Summary::Mean(m) => {
                let names = self.schema.responses.join(", ");
                let vals: Vec<String> = m.iter().map(|v| fmt_num(*v)).collect();
                format!("mean ({names}) = ({})", vals.join(", "))
            }
            Summary::Curve(c) => {
                let k = c.knots();
                let (first, last) = (k[0], k[k.len() - 1]);
                format!(
                    "curve from {} at {} to {} at {} ({} knots)",
                    fmt_num(first.1),
                    fmt_num(first.0),
                    fmt_num(last.1),
                    fmt_num(last.0),
                    k.len()
                )
            }
        }
    }

    /// Left and right branch conditions of a rule.
    pub fn conditions(&self, rule: &SplitRule) -> (String, String) {
        let p = &self.schema.predictors[rule.var()];
        let name = &p.name;
        let na = |b: bool| if b { " or NA" } else { "" };
        match rule {
            SplitRule::Numeric {
                all_missing_split: true,
                ..
            } => (format!("{name} = NA"), format!("{name} /= NA")),
            SplitRule::Numeric {
                threshold,
                missing_goes_left,
                ..
            } => (
                format!("{name} <= {}{}", fmt_num(*threshold), na(*missing_goes_left)),
                format!("{name} > {}{}", fmt_num(*threshold), na(!missing_goes_left)),
            ),
            SplitRule::Categorical {
                left_categories,
                missing_in_left,
                ..
            } => {
                let label = |c: usize| p.levels.get(c).cloned().unwrap_or_else(|| format!("#{c}"));
                let left: Vec<String> = left_categories.iter().map(|&c| label(c as usize)).collect();
                let right: Vec<String> = (0..p.levels.len())
                    .filter(|c| !left_categories.contains(&(*c as u32)))
                    .map(label)
                    .collect();
                (
                    format!("{name} in {{{}}}{}", left.join(", "), na(*missing_in_left)),
                    format!("{name} in {{{}}}{}", right.join(", "), na(!missing_in_left)),
                )
            }
        }
    }

    /// Terminal-node summaries as CSV: `node,n,sse,<response means>`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("node,n,sse");
        let labels = self.heap_labels();
        match self.layout {
            crate::dataset::Layout::Multiresponse => {
                for r in &self.schema.responses {
                    out.push(',');
                    out.push_str(r);
                }
            }
            crate::dataset::Layout::Longitudinal => out.push_str(",knots"),
        }
        out.push('\n');
        for node in self.leaves() {
            let _ = write!(out, "{},{},{}", labels[node.id], node.n, node.sse);
            match &node.summary {
                Summary::Mean(m) => m.iter().for_each(|v| {
                    let _ = write!(out, ",{v}");
                }),
                Summary::Curve(c) => {
                    let _ = write!(out, ",{}", c.knots().len());
                }
            }
            out.push('\n');
        }
        out
    }

    /// Knots of every terminal curve as CSV: `node,u,fitted`.
    pub fn curve_csv(&self) -> String {
        let labels = self.heap_labels();
        let mut out = String::from("node,u,fitted\n");
        for node in self.leaves() {
            if let Summary::Curve(c) = &node.summary {
                for (u, s) in c.knots() {
                    let _ = writeln!(out, "{},{u},{s}", labels[node.id]);
                }
            }
        }
        out
    }

    /// Heap-style label (root 1, children 2k and 2k+1) of each node.
    pub fn heap_labels(&self) -> Vec<u64> {
        let mut labels = vec![0u64; self.nodes.len()];
        labels[0] = 1;
        for id in 0..self.nodes.len() {
            if let Some(s) = &self.nodes[id].split {
                labels[s.left] = labels[id].saturating_mul(2);
                labels[s.right] = labels[id].saturating_mul(2).saturating_add(1);
            }
        }
        labels
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}
