use serde::{Deserialize, Serialize};

use super::{Condition, DecisionTree, NodeKind};
use crate::scalar::Scalar;

/// Size counts of a tree read as a nested if-then-else formula.
///
/// Counting convention:
/// - a leaf is one constant (its action);
/// - an orthogonal split `if x < c` is a variable, a constant, a comparison
///   and an if-dispatch;
/// - an oblique split over `m` nonzero terms adds `m` coefficients, the
///   threshold, `m` variables, `m` multiplications and `m - 1` additions on
///   top of the comparison and the if-dispatch.
///
/// The comparison feeding an if counts as one consecutive composition of
/// non-arithmetical operations, and so does each if nested directly under
/// another if. Every split therefore adds 2 to `n_naoc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExpressionStats {
    pub l: u64,
    pub n_o: u64,
    pub n_nao: u64,
    pub n_naoc: u64,
}

pub fn to_expression_stats<S: Scalar>(tree: &DecisionTree<S>) -> ExpressionStats {
    let mut s = ExpressionStats::default();
    let mut stack = vec![tree.root];
    while let Some(id) = stack.pop() {
        match &tree.nodes[id].kind {
            NodeKind::Split {
                condition,
                if_true,
                if_false,
            } => {
                match condition {
                    Condition::Orthogonal { .. } => {
                        s.l += 4;
                        s.n_o += 2;
                    }
                    Condition::Oblique { coefficients, .. } => {
                        let m = coefficients.iter().filter(|c| !c.is_zero()).count() as u64;
                        let adds = m.saturating_sub(1);
                        // coefficients + threshold + variables + mults + adds + cmp + if
                        s.l += m + 1 + m + m + adds + 2;
                        s.n_o += m + adds + 2;
                    }
                }
                s.n_nao += 2;
                s.n_naoc += 2;
                stack.push(*if_true);
                stack.push(*if_false);
            }
            _ => s.l += 1,
        }
    }
    s
}
