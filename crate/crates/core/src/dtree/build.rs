//! Turns decoded phenotype tokens into a [`DecisionTree`].
//!
//! Token language produced by the shipped grammars:
//!
//! ```text
//! tree := if <cond> then <tree> else <tree> | leaf | <action name>
//! cond := <var> lt <num> | <var> gt <num>
//!       | lt ( <num> [*] <var> { + <num> [*] <var> } , <num> )
//! ```
//!
//! Oblique sums must mention every observation variable exactly once, in any
//! order.

use super::{Comparator, Condition, DecisionTree, Node, NodeKind, QLeaf, Schema};
use crate::error::TreeError;
use crate::scalar::Scalar;

/// Extra information that is not part of the token stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildOptions<S> {
    /// Per-dimension bounds attached to every oblique condition.
    pub normalization: Option<Vec<(S, S)>>,
}

struct Cursor<'a, 't> {
    tokens: &'a [&'t str],
    pos: usize,
}

impl<'a, 't> Cursor<'a, 't> {
    fn next(&mut self) -> Result<&'t str, TreeError> {
        let t = self
            .tokens
            .get(self.pos)
            .copied()
            .ok_or_else(|| TreeError::Syntax {
                position: self.pos,
                message: "unexpected end of input".into(),
            })?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&'t str> {
        self.tokens.get(self.pos).copied()
    }

    fn expect(&mut self, want: &str) -> Result<(), TreeError> {
        let at = self.pos;
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(TreeError::Syntax {
                position: at,
                message: format!("expected `{want}`, found `{got}`"),
            })
        }
    }

    fn number<S: Scalar>(&mut self) -> Result<S, TreeError> {
        let at = self.pos;
        let t = self.next()?;
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(S::lit)
            .ok_or_else(|| TreeError::Syntax {
                position: at,
                message: format!("expected a number, found `{t}`"),
            })
    }

    fn variable(&mut self, schema: &Schema) -> Result<usize, TreeError> {
        let t = self.next()?;
        schema
            .observation_index(t)
            .ok_or_else(|| TreeError::UnknownVariable(t.to_string()))
    }
}

enum Pending {
    Tree { parent: Option<(usize, bool)> },
    Keyword(&'static str),
}

impl<S: Scalar> DecisionTree<S> {
    /// Builds a tree from phenotype tokens. Learning leaves start with zero
    /// Q-values; call [`init_q`](DecisionTree::init_q) before training.
    pub fn from_tokens(
        tokens: &[&str],
        schema: &Schema,
        opts: &BuildOptions<S>,
    ) -> Result<Self, TreeError> {
        if let Some(b) = &opts.normalization {
            if b.len() != schema.observation_dim() {
                return Err(TreeError::Invalid(
                    "normalization bounds do not match the observation dimension".into(),
                ));
            }
        }
        let mut cur = Cursor { tokens, pos: 0 };
        let mut nodes: Vec<Node<S>> = Vec::new();
        let mut pending = vec![Pending::Tree { parent: None }];

        while let Some(item) = pending.pop() {
            let parent = match item {
                Pending::Keyword(k) => {
                    cur.expect(k)?;
                    continue;
                }
                Pending::Tree { parent } => parent,
            };
            let at = cur.pos;
            let tok = cur.next()?;
            let id = nodes.len();
            let kind = match tok {
                "if" => {
                    let condition = parse_condition(&mut cur, schema, opts)?;
                    cur.expect("then")?;
                    pending.push(Pending::Tree {
                        parent: Some((id, false)),
                    });
                    pending.push(Pending::Keyword("else"));
                    pending.push(Pending::Tree {
                        parent: Some((id, true)),
                    });
                    NodeKind::Split {
                        condition,
                        if_true: usize::MAX,
                        if_false: usize::MAX,
                    }
                }
                "leaf" => NodeKind::QLeaf(QLeaf::new(schema.action_count())),
                name => match schema.action_index(name) {
                    Some(action) => NodeKind::Action { action },
                    None => {
                        return Err(TreeError::Syntax {
                            position: at,
                            message: format!("expected `if`, `leaf` or an action, found `{name}`"),
                        })
                    }
                },
            };
            nodes.push(Node::new(kind));
            if let Some((p, branch)) = parent {
                if let NodeKind::Split {
                    if_true, if_false, ..
                } = &mut nodes[p].kind
                {
                    if branch {
                        *if_true = id;
                    } else {
                        *if_false = id;
                    }
                }
            }
        }
        if cur.pos != tokens.len() {
            return Err(TreeError::Syntax {
                position: cur.pos,
                message: format!("trailing token `{}`", tokens[cur.pos]),
            });
        }
        DecisionTree::from_parts(schema.clone(), 0, nodes)
    }
}

fn parse_condition<S: Scalar>(
    cur: &mut Cursor<'_, '_>,
    schema: &Schema,
    opts: &BuildOptions<S>,
) -> Result<Condition<S>, TreeError> {
    if cur.peek() == Some("lt") {
        cur.next()?;
        cur.expect("(")?;
        let dim = schema.observation_dim();
        let mut coefficients: Vec<Option<S>> = vec![None; dim];
        loop {
            let c = cur.number::<S>()?;
            if cur.peek() == Some("*") {
                cur.next()?;
            }
            let at = cur.pos;
            let var = cur.variable(schema)?;
            if coefficients[var].replace(c).is_some() {
                return Err(TreeError::Syntax {
                    position: at,
                    message: format!("variable `{}` repeated in sum", schema.observations[var]),
                });
            }
            let at = cur.pos;
            match cur.next()? {
                "+" => continue,
                "," => break,
                other => {
                    return Err(TreeError::Syntax {
                        position: at,
                        message: format!("expected `+` or `,`, found `{other}`"),
                    })
                }
            }
        }
        let threshold = cur.number::<S>()?;
        cur.expect(")")?;
        let coefficients = coefficients
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| {
                    TreeError::Invalid(format!(
                        "oblique sum misses variable `{}`",
                        schema.observations[i]
                    ))
                })
            })
            .collect::<Result<Vec<S>, _>>()?;
        return Ok(Condition::Oblique {
            coefficients,
            threshold,
            normalization: opts.normalization.clone(),
        });
    }
    let var = cur.variable(schema)?;
    let at = cur.pos;
    let comparator = match cur.next()? {
        "lt" => Comparator::Lt,
        "gt" => Comparator::Gt,
        other => {
            return Err(TreeError::Syntax {
                position: at,
                message: format!("expected `lt` or `gt`, found `{other}`"),
            })
        }
    };
    let threshold = cur.number::<S>()?;
    Ok(Condition::Orthogonal {
        var,
        comparator,
        threshold,
    })
}
