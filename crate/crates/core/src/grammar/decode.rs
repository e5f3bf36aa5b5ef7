use std::fmt;

use super::{Genotype, Grammar, Symbol};

/// Node of a derivation tree, stored in an arena.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivationNode<'g> {
    Terminal(&'g str),
    Rule {
        rule: usize,
        production: usize,
        children: Vec<usize>,
    },
}

/// Result of a successful decode. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation<'g> {
    pub nodes: Vec<DerivationNode<'g>>,
    pub codons_used: usize,
    pub expansions: usize,
}

impl<'g> Derivation<'g> {
    /// Terminal tokens in left-to-right order.
    pub fn tokens(&self) -> Vec<&'g str> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &self.nodes[i] {
                DerivationNode::Terminal(t) => out.push(*t),
                DerivationNode::Rule { children, .. } => stack.extend(children.iter().rev()),
            }
        }
        out
    }

    pub fn text(&self) -> String {
        self.tokens().join(" ")
    }
}

/// Why a genotype has no phenotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeFailure {
    CodonsExhausted { used: usize },
    ExpansionLimit { limit: usize },
}

impl fmt::Display for DecodeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeFailure::CodonsExhausted { used } => {
                write!(f, "codons exhausted after {used} choices")
            }
            DecodeFailure::ExpansionLimit { limit } => {
                write!(f, "more than {limit} expansions")
            }
        }
    }
}

/// Leftmost derivation from the start rule.
///
/// At a rule with `p` productions the next codon `c` selects production
/// `c mod p`. Rules with a single production consume no codon. There is no
/// wrapping: running out of codons is a failure.
pub fn decode<'g>(
    genotype: &Genotype,
    grammar: &'g Grammar,
    max_expansions: usize,
) -> Result<Derivation<'g>, DecodeFailure> {
    assert!(max_expansions > 0, "max_expansions must be positive");
    let codons = genotype.codons();
    let rules = grammar.rules();

    let mut nodes = vec![DerivationNode::Rule {
        rule: grammar.start_index(),
        production: usize::MAX,
        children: Vec::new(),
    }];
    // Pending nonterminal nodes, leftmost on top.
    let mut pending = vec![0usize];
    let mut used = 0usize;
    let mut expansions = 0usize;

    while let Some(node) = pending.pop() {
        let rule_idx = match nodes[node] {
            DerivationNode::Rule { rule, .. } => rule,
            DerivationNode::Terminal(_) => unreachable!("terminals are never pending"),
        };
        expansions += 1;
        if expansions > max_expansions {
            return Err(DecodeFailure::ExpansionLimit {
                limit: max_expansions,
            });
        }
        let rule = &rules[rule_idx];
        let choice = if rule.productions.len() == 1 {
            0
        } else {
            let Some(&c) = codons.get(used) else {
                return Err(DecodeFailure::CodonsExhausted { used });
            };
            used += 1;
            c as usize % rule.productions.len()
        };

        let first_child = nodes.len();
        for sym in &rule.productions[choice] {
            nodes.push(match sym {
                Symbol::Terminal(t) => DerivationNode::Terminal(t.as_str()),
                Symbol::Rule(r) => DerivationNode::Rule {
                    rule: *r,
                    production: usize::MAX,
                    children: Vec::new(),
                },
            });
        }
        let children: Vec<usize> = (first_child..nodes.len()).collect();
        for &c in children.iter().rev() {
            if matches!(nodes[c], DerivationNode::Rule { .. }) {
                pending.push(c);
            }
        }
        nodes[node] = DerivationNode::Rule {
            rule: rule_idx,
            production: choice,
            children,
        };
    }

    Ok(Derivation {
        nodes,
        codons_used: used,
        expansions,
    })
}
