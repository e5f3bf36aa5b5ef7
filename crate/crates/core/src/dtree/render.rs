use std::fmt::Write;

use super::{Comparator, Condition, DecisionTree, NodeId, NodeKind};
use crate::scalar::Scalar;

impl<S: Scalar> Condition<S> {
    /// Human-readable form using the given observation names. Constants are
    /// printed at full stored precision.
    pub fn describe(&self, names: &[String]) -> String {
        match self {
            Condition::Orthogonal {
                var,
                comparator,
                threshold,
            } => {
                let op = match comparator {
                    Comparator::Lt => "<",
                    Comparator::Gt => ">",
                };
                format!("{} {op} {threshold}", names[*var])
            }
            Condition::Oblique {
                coefficients,
                threshold,
                normalization,
            } => {
                let mut s = String::new();
                for (i, c) in coefficients.iter().enumerate() {
                    let var = if normalization.is_some() {
                        format!("norm({})", names[i])
                    } else {
                        names[i].clone()
                    };
                    if i == 0 {
                        let _ = write!(s, "{c}*{var}");
                    } else if c.is_sign_negative() {
                        let _ = write!(s, " - {}*{var}", c.abs());
                    } else {
                        let _ = write!(s, " + {c}*{var}");
                    }
                }
                let _ = write!(s, " < {threshold}");
                s
            }
        }
    }
}

impl<S: Scalar> DecisionTree<S> {
    fn leaf_label(&self, id: NodeId) -> &str {
        &self.schema.actions[self.leaf_action(id)]
    }

    /// Indented `if ... then ... else ...` rendering. A single leaf renders
    /// as one line holding its action.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(self.root, 0, &mut out);
        out
    }

    fn write_text(&self, id: NodeId, depth: usize, out: &mut String) {
        let pad = "    ".repeat(depth);
        match &self.nodes[id].kind {
            NodeKind::Split {
                condition,
                if_true,
                if_false,
            } => {
                let _ = writeln!(
                    out,
                    "{pad}if {} then",
                    condition.describe(&self.schema.observations)
                );
                self.write_text(*if_true, depth + 1, out);
                let _ = writeln!(out, "{pad}else");
                self.write_text(*if_false, depth + 1, out);
            }
            _ => {
                let _ = writeln!(out, "{pad}{}", self.leaf_label(id));
            }
        }
    }

    /// Graphviz rendering; edges are labelled `True` / `False`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n    node [fontname=\"monospace\"];\n");
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id].kind {
                NodeKind::Split {
                    condition,
                    if_true,
                    if_false,
                } => {
                    let label = condition.describe(&self.schema.observations);
                    let _ = writeln!(out, "    n{id} [shape=box, label=\"{}\"];", escape(&label));
                    let _ = writeln!(out, "    n{id} -> n{if_true} [label=\"True\"];");
                    let _ = writeln!(out, "    n{id} -> n{if_false} [label=\"False\"];");
                    stack.push(*if_false);
                    stack.push(*if_true);
                }
                _ => {
                    let _ = writeln!(
                        out,
                        "    n{id} [shape=ellipse, label=\"{}\"];",
                        escape(self.leaf_label(id))
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
