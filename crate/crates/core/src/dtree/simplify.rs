use super::{DecisionTree, Node, NodeId, NodeKind};
use crate::envs::{run_episode, Environment, EpisodeOptions, Mode};
use crate::error::EnvError;
use crate::scalar::Scalar;
use crate::seed;

pub const DEFAULT_VALIDATION_EPISODES: usize = 100;

/// Prunes a trained tree against the states it actually meets.
///
/// Runs `episodes` greedy episodes (episode `i` resets from the stream
/// `(seed, VALIDATION, i)`) while counting traversals, drops every subtree
/// that was never entered, and then collapses splits whose two leaves agree
/// on the greedy action. A collapsed split keeps the more traversed leaf.
/// The returned tree carries the traversal counts of the validation run.
pub fn simplify<S, E>(
    tree: &DecisionTree<S>,
    env: &mut E,
    episodes: usize,
    seed: u64,
) -> Result<DecisionTree<S>, EnvError>
where
    S: Scalar,
    E: Environment<S> + ?Sized,
{
    let mut t = tree.clone();
    t.reset_traversals();
    let opts = EpisodeOptions {
        record_distance: false,
        track_visits: true,
    };
    for i in 0..episodes {
        let mut rng = seed::derived_rng(seed, seed::stream::VALIDATION, i as u64);
        run_episode(&mut t, env, Mode::Greedy, opts, &mut rng)?;
    }
    if t.nodes[t.root].traversals == 0 {
        return Ok(t);
    }

    let mut nodes = Vec::with_capacity(t.nodes.len());
    let root = prune(&t, t.root, &mut nodes);
    let mut out = DecisionTree {
        schema: t.schema.clone(),
        root,
        nodes,
    };
    while merge_pass(&mut out) {}
    Ok(compact(&out))
}

/// Copies the visited part of the subtree at `id` into `out`, splicing the
/// visited child in place of any split with an unvisited branch.
fn prune<S: Scalar>(t: &DecisionTree<S>, id: NodeId, out: &mut Vec<Node<S>>) -> NodeId {
    match &t.nodes[id].kind {
        NodeKind::Split {
            condition,
            if_true,
            if_false,
        } => {
            let seen_t = t.nodes[*if_true].traversals > 0;
            let seen_f = t.nodes[*if_false].traversals > 0;
            match (seen_t, seen_f) {
                (true, false) => prune(t, *if_true, out),
                (false, true) => prune(t, *if_false, out),
                _ => {
                    let slot = out.len();
                    out.push(t.nodes[id].clone());
                    let a = prune(t, *if_true, out);
                    let b = prune(t, *if_false, out);
                    out[slot].kind = NodeKind::Split {
                        condition: condition.clone(),
                        if_true: a,
                        if_false: b,
                    };
                    slot
                }
            }
        }
        _ => {
            out.push(t.nodes[id].clone());
            out.len() - 1
        }
    }
}

/// Collapses, bottom-up, every split whose children are leaves with the same
/// action. Returns whether anything changed.
fn merge_pass<S: Scalar>(t: &mut DecisionTree<S>) -> bool {
    let mut order = Vec::new();
    let mut stack = vec![t.root];
    while let Some(id) = stack.pop() {
        order.push(id);
        if let NodeKind::Split {
            if_true, if_false, ..
        } = &t.nodes[id].kind
        {
            stack.push(*if_true);
            stack.push(*if_false);
        }
    }
    let mut changed = false;
    // parents appear before children in `order`
    for &id in order.iter().rev() {
        let NodeKind::Split {
            if_true, if_false, ..
        } = t.nodes[id].kind
        else {
            continue;
        };
        let (a, b) = (&t.nodes[if_true], &t.nodes[if_false]);
        if !(a.is_leaf() && b.is_leaf()) || t.leaf_action(if_true) != t.leaf_action(if_false) {
            continue;
        }
        let keep = if b.traversals > a.traversals {
            if_false
        } else {
            if_true
        };
        let traversals = t.nodes[id].traversals;
        let kind = t.nodes[keep].kind.clone();
        t.nodes[id] = Node { kind, traversals };
        changed = true;
    }
    changed
}

/// Drops unreachable arena slots and renumbers in preorder.
fn compact<S: Scalar>(t: &DecisionTree<S>) -> DecisionTree<S> {
    let mut nodes = Vec::new();
    let root = copy_preorder(t, t.root, &mut nodes);
    DecisionTree {
        schema: t.schema.clone(),
        root,
        nodes,
    }
}

fn copy_preorder<S: Scalar>(t: &DecisionTree<S>, id: NodeId, out: &mut Vec<Node<S>>) -> NodeId {
    let slot = out.len();
    out.push(t.nodes[id].clone());
    if let NodeKind::Split {
        condition,
        if_true,
        if_false,
    } = &t.nodes[id].kind
    {
        let a = copy_preorder(t, *if_true, out);
        let b = copy_preorder(t, *if_false, out);
        out[slot].kind = NodeKind::Split {
            condition: condition.clone(),
            if_true: a,
            if_false: b,
        };
    }
    slot
}
