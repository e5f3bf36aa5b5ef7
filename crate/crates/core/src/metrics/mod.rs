//! Complexity scoring, rank tests and robustness sweeps.

mod mann_whitney;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::dtree::{to_expression_stats, DecisionTree, ExpressionStats};
use crate::scalar::Scalar;

pub use mann_whitney::{mann_whitney_u, mann_whitney_u_with, Method, TestOutcome};
pub(crate) use sweep::mean_std;
pub use sweep::{noise_sweep, stability_csv, stability_trace, sweep_csv, SweepPoint};

/// Complexity of a tree read as a formula; lower is easier to read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpretabilityReport {
    pub l: u64,
    pub n_o: u64,
    pub n_nao: u64,
    pub n_naoc: u64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl InterpretabilityReport {
    pub fn from_stats(s: ExpressionStats) -> Self {
        InterpretabilityReport {
            l: s.l,
            n_o: s.n_o,
            n_nao: s.n_nao,
            n_naoc: s.n_naoc,
            m: score(s.l, s.n_o, s.n_nao, s.n_naoc),
        }
    }
}

/// `-0.2 + 0.2 l + 0.5 n_o + 3.4 n_nao + 4.5 n_naoc`
pub fn score(l: u64, n_o: u64, n_nao: u64, n_naoc: u64) -> f64 {
    -0.2 + 0.2 * l as f64 + 0.5 * n_o as f64 + 3.4 * n_nao as f64 + 4.5 * n_naoc as f64
}

pub fn complexity<S: Scalar>(tree: &DecisionTree<S>) -> InterpretabilityReport {
    InterpretabilityReport::from_stats(to_expression_stats(tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtree::tests::{best_orthogonal, cartpole_schema};
    use crate::dtree::BuildOptions;
    use approx::assert_abs_diff_eq;

    fn tree(text: &str) -> DecisionTree<f64> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        DecisionTree::from_tokens(&toks, &cartpole_schema(), &BuildOptions::default()).unwrap()
    }

    #[test]
    fn constant_leaf_scores_zero() {
        let r = complexity(&tree("move_left"));
        assert_eq!((r.l, r.n_o, r.n_nao, r.n_naoc), (1, 0, 0, 0));
        assert_abs_diff_eq!(r.m, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_two_split_calibration() {
        let r = complexity(&best_orthogonal());
        assert_abs_diff_eq!(r.m, 35.6, epsilon = 1e-9);
    }

    #[test]
    fn oblique_one_split_calibration() {
        let t = tree(
            "if lt ( -0.274 x + 0.12 v + -0.904 theta + -0.32 omega , -0.169 ) then move_left else move_right",
        );
        let r = complexity(&t);
        assert_abs_diff_eq!(r.m, 24.1, epsilon = 1e-9);
    }

    #[test]
    fn formula_identity_from_counts() {
        let r = complexity(&best_orthogonal());
        assert_eq!(r.m, score(r.l, r.n_o, r.n_nao, r.n_naoc));
    }

    #[test]
    fn json_uses_capital_m() {
        let r = complexity(&tree("move_left"));
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        assert!(v.get("M").is_some());
    }
}
