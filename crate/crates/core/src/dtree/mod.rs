//! Decision-tree policies with Q-learning leaves.
//!
//! Trees live in an arena: node ids index into [`DecisionTree::nodes`].
//! Internal nodes hold a [`Condition`]; `true` outcomes go to `if_true`.
//! Leaves either learn (a [`QLeaf`]) or emit a fixed action (trees evolved
//! without Q-learning).

mod build;
mod render;
mod simplify;
mod stats;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::TreeError;
use crate::qlearn::QInit;
use crate::scalar::Scalar;

pub use build::BuildOptions;
pub use simplify::{simplify, DEFAULT_VALIDATION_EPISODES};
pub use stats::{to_expression_stats, ExpressionStats};

pub type NodeId = usize;

/// Deepest tree accepted from a document.
pub const MAX_DEPTH: usize = 2048;

/// Names of the observation components and actions a tree refers to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub observations: Vec<String>,
    pub actions: Vec<String>,
}

impl Schema {
    pub fn new<I, J, A, B>(observations: I, actions: J) -> Self
    where
        I: IntoIterator<Item = A>,
        J: IntoIterator<Item = B>,
        A: Into<String>,
        B: Into<String>,
    {
        Schema {
            observations: observations.into_iter().map(Into::into).collect(),
            actions: actions.into_iter().map(Into::into).collect(),
        }
    }

    pub fn observation_dim(&self) -> usize {
        self.observations.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn observation_index(&self, name: &str) -> Option<usize> {
        self.observations.iter().position(|o| o == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Lt,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Condition<S> {
    /// `obs[var] <comparator> threshold`
    Orthogonal {
        var: usize,
        comparator: Comparator,
        threshold: S,
    },
    /// `sum_i coefficients[i] * x_i < threshold`, where `x_i` is min-max
    /// normalized to `[0, 1]` when bounds are present.
    Oblique {
        coefficients: Vec<S>,
        threshold: S,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalization: Option<Vec<(S, S)>>,
    },
}

impl<S: Scalar> Condition<S> {
    /// Panics if `obs` does not match the condition's dimension.
    pub fn eval(&self, obs: &[S]) -> bool {
        match self {
            Condition::Orthogonal {
                var,
                comparator,
                threshold,
            } => {
                let x = obs[*var];
                match comparator {
                    Comparator::Lt => x < *threshold,
                    Comparator::Gt => x > *threshold,
                }
            }
            Condition::Oblique {
                coefficients,
                threshold,
                normalization,
            } => {
                assert_eq!(
                    coefficients.len(),
                    obs.len(),
                    "observation dimension mismatch"
                );
                let dot = match normalization {
                    None => coefficients
                        .iter()
                        .zip(obs)
                        .fold(S::zero(), |acc, (c, x)| acc + *c * *x),
                    Some(bounds) => coefficients
                        .iter()
                        .zip(obs)
                        .zip(bounds)
                        .fold(S::zero(), |acc, ((c, x), (lo, hi))| {
                            acc + *c * ((*x - *lo) / (*hi - *lo))
                        }),
                };
                dot < *threshold
            }
        }
    }

    fn check(&self, dim: usize) -> Result<(), TreeError> {
        match self {
            Condition::Orthogonal { var, threshold, .. } => {
                if *var >= dim {
                    return Err(TreeError::Invalid(format!(
                        "variable index {var} out of range for dimension {dim}"
                    )));
                }
                if !threshold.is_finite() {
                    return Err(TreeError::Invalid("non-finite threshold".into()));
                }
            }
            Condition::Oblique {
                coefficients,
                threshold,
                normalization,
            } => {
                if coefficients.len() != dim {
                    return Err(TreeError::Invalid(format!(
                        "{} coefficients for dimension {dim}",
                        coefficients.len()
                    )));
                }
                if !threshold.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(TreeError::Invalid("non-finite oblique constant".into()));
                }
                if let Some(bounds) = normalization {
                    if bounds.len() != dim || bounds.iter().any(|(lo, hi)| !(lo < hi)) {
                        return Err(TreeError::Invalid(
                            "normalization needs low < high for every dimension".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Q-values and visit counters of a learning leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct QLeaf<S> {
    pub q: Vec<S>,
    pub visits: u64,
    pub action_visits: Vec<u64>,
}

impl<S: Scalar> QLeaf<S> {
    pub fn new(action_count: usize) -> Self {
        QLeaf {
            q: vec![S::zero(); action_count],
            visits: 0,
            action_visits: vec![0; action_count],
        }
    }

    pub fn max_q(&self) -> S {
        self.q
            .iter()
            .copied()
            .fold(S::neg_infinity(), |a, b| if b > a { b } else { a })
    }
}

/// Index of the largest value; ties are broken uniformly with `tie_rng`.
/// The generator is only consumed when a tie actually occurs.
pub fn greedy_action<S: Scalar, R: Rng + ?Sized>(q: &[S], tie_rng: &mut R) -> usize {
    assert!(!q.is_empty(), "leaf without actions");
    let mut best = 0;
    let mut ties = 1usize;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
            ties = 1;
        } else if v == q[best] {
            ties += 1;
        }
    }
    if ties == 1 {
        return best;
    }
    let pick = tie_rng.random_range(0..ties);
    q.iter()
        .enumerate()
        .filter(|(_, &v)| v == q[best])
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap()
}

/// First index holding the maximum. Used where a deterministic label is
/// needed (rendering, merging leaves).
pub fn first_argmax<S: Scalar>(q: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate() {
        if v > q[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind<S> {
    Split {
        condition: Condition<S>,
        if_true: NodeId,
        if_false: NodeId,
    },
    QLeaf(QLeaf<S>),
    Action {
        action: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Node<S> {
    #[serde(flatten)]
    pub kind: NodeKind<S>,
    /// How many times routing passed through this node while tracking.
    #[serde(default)]
    pub traversals: u64,
}

impl<S> Node<S> {
    pub(crate) fn new(kind: NodeKind<S>) -> Self {
        Node {
            kind,
            traversals: 0,
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self.kind, NodeKind::Split { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DecisionTree<S> {
    pub schema: Schema,
    pub root: NodeId,
    pub nodes: Vec<Node<S>>,
}

impl<S: Scalar> DecisionTree<S> {
    /// Single learning leaf.
    pub fn single_leaf(schema: Schema) -> Self {
        let n = schema.action_count();
        DecisionTree {
            schema,
            root: 0,
            nodes: vec![Node::new(NodeKind::QLeaf(QLeaf::new(n)))],
        }
    }

    /// Builds and validates a tree from parts.
    pub fn from_parts(
        schema: Schema,
        root: NodeId,
        nodes: Vec<Node<S>>,
    ) -> Result<Self, TreeError> {
        let tree = DecisionTree {
            schema,
            root,
            nodes,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn observation_dim(&self) -> usize {
        self.schema.observation_dim()
    }

    pub fn action_count(&self) -> usize {
        self.schema.action_count()
    }

    /// Checks the structural invariants: every node reachable exactly once
    /// from the root, binary splits, leaves sized to the action count.
    pub fn validate(&self) -> Result<(), TreeError> {
        let n = self.nodes.len();
        let dim = self.observation_dim();
        let actions = self.action_count();
        if actions == 0 {
            return Err(TreeError::Invalid("schema has no actions".into()));
        }
        if self.root >= n {
            return Err(TreeError::Invalid("root out of range".into()));
        }
        let mut seen = vec![false; n];
        let mut stack = vec![(self.root, 1usize)];
        while let Some((id, depth)) = stack.pop() {
            if id >= n {
                return Err(TreeError::Invalid(format!("child index {id} out of range")));
            }
            if seen[id] {
                return Err(TreeError::Invalid(format!("node {id} reached twice")));
            }
            if depth > MAX_DEPTH {
                return Err(TreeError::Invalid(format!("deeper than {MAX_DEPTH}")));
            }
            seen[id] = true;
            match &self.nodes[id].kind {
                NodeKind::Split {
                    condition,
                    if_true,
                    if_false,
                } => {
                    condition.check(dim)?;
                    stack.push((*if_false, depth + 1));
                    stack.push((*if_true, depth + 1));
                }
                NodeKind::QLeaf(leaf) => {
                    if leaf.q.len() != actions || leaf.action_visits.len() != actions {
                        return Err(TreeError::Invalid(format!(
                            "leaf {id} sized for {} actions, expected {actions}",
                            leaf.q.len()
                        )));
                    }
                }
                NodeKind::Action { action } => {
                    if *action >= actions {
                        return Err(TreeError::Invalid(format!("action {action} out of range")));
                    }
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(TreeError::Invalid(format!("node {orphan} unreachable")));
        }
        Ok(())
    }

    /// Walks from the root to a leaf.
    pub fn route(&self, obs: &[S]) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.nodes[id].kind {
                NodeKind::Split {
                    condition,
                    if_true,
                    if_false,
                } => {
                    id = if condition.eval(obs) {
                        *if_true
                    } else {
                        *if_false
                    }
                }
                _ => return id,
            }
        }
    }

    /// Like [`route`](Self::route), incrementing the traversal counter of
    /// every node on the path.
    pub fn route_tracked(&mut self, obs: &[S]) -> NodeId {
        let mut id = self.root;
        loop {
            self.nodes[id].traversals += 1;
            match &self.nodes[id].kind {
                NodeKind::Split {
                    condition,
                    if_true,
                    if_false,
                } => {
                    id = if condition.eval(obs) {
                        *if_true
                    } else {
                        *if_false
                    }
                }
                _ => return id,
            }
        }
    }

    pub fn reset_traversals(&mut self) {
        for n in &mut self.nodes {
            n.traversals = 0;
        }
    }

    /// Greedy action at a leaf node.
    pub fn greedy_at<R: Rng + ?Sized>(&self, leaf: NodeId, tie_rng: &mut R) -> usize {
        match &self.nodes[leaf].kind {
            NodeKind::QLeaf(l) => greedy_action(&l.q, tie_rng),
            NodeKind::Action { action } => *action,
            NodeKind::Split { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    /// Deterministic action label of a leaf (first maximal Q-value).
    pub fn leaf_action(&self, leaf: NodeId) -> usize {
        match &self.nodes[leaf].kind {
            NodeKind::QLeaf(l) => first_argmax(&l.q),
            NodeKind::Action { action } => *action,
            NodeKind::Split { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    pub fn q_leaf(&self, id: NodeId) -> Option<&QLeaf<S>> {
        match &self.nodes[id].kind {
            NodeKind::QLeaf(l) => Some(l),
            _ => None,
        }
    }

    pub fn q_leaf_mut(&mut self, id: NodeId) -> Option<&mut QLeaf<S>> {
        match &mut self.nodes[id].kind {
            NodeKind::QLeaf(l) => Some(l),
            _ => None,
        }
    }

    /// Ids of all leaves reachable from the root, left to right.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id].kind {
                NodeKind::Split {
                    if_true, if_false, ..
                } => {
                    stack.push(*if_false);
                    stack.push(*if_true);
                }
                _ => out.push(id),
            }
        }
        out
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn has_q_leaves(&self) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n.kind, NodeKind::QLeaf(_)))
    }

    /// Resets every learning leaf: Q-values from `init`, counters to zero.
    pub fn init_q<R: Rng + ?Sized>(&mut self, init: &QInit<S>, rng: &mut R) {
        for node in &mut self.nodes {
            if let NodeKind::QLeaf(leaf) = &mut node.kind {
                for q in &mut leaf.q {
                    *q = init.sample(rng);
                }
                leaf.visits = 0;
                leaf.action_visits.iter_mut().for_each(|v| *v = 0);
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let tree: DecisionTree<S> = serde_json::from_str(text)
            .map_err(|e| TreeError::Invalid(format!("malformed tree document: {e}")))?;
        tree.validate()?;
        Ok(tree)
    }

    /// Same tree with scalars converted to another precision.
    pub fn cast<T: Scalar>(&self) -> DecisionTree<T> {
        let c = |x: S| T::lit(x.as_f64());
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                traversals: n.traversals,
                kind: match &n.kind {
                    NodeKind::Split {
                        condition,
                        if_true,
                        if_false,
                    } => NodeKind::Split {
                        condition: match condition {
                            Condition::Orthogonal {
                                var,
                                comparator,
                                threshold,
                            } => Condition::Orthogonal {
                                var: *var,
                                comparator: *comparator,
                                threshold: c(*threshold),
                            },
                            Condition::Oblique {
                                coefficients,
                                threshold,
                                normalization,
                            } => Condition::Oblique {
                                coefficients: coefficients.iter().map(|x| c(*x)).collect(),
                                threshold: c(*threshold),
                                normalization: normalization
                                    .as_ref()
                                    .map(|b| b.iter().map(|(l, h)| (c(*l), c(*h))).collect()),
                            },
                        },
                        if_true: *if_true,
                        if_false: *if_false,
                    },
                    NodeKind::QLeaf(l) => NodeKind::QLeaf(QLeaf {
                        q: l.q.iter().map(|x| c(*x)).collect(),
                        visits: l.visits,
                        action_visits: l.action_visits.clone(),
                    }),
                    NodeKind::Action { action } => NodeKind::Action { action: *action },
                },
            })
            .collect();
        DecisionTree {
            schema: self.schema.clone(),
            root: self.root,
            nodes,
        }
    }
}
