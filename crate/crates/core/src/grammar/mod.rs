//! BNF grammars and the Grammatical Evolution genotype-to-phenotype mapping.
//!
//! Grammar files are line oriented:
//!
//! ```text
//! # comment
//! dt        ::= <if>
//! if        ::= if <condition> then <action> else <action>
//! action    ::= leaf | <if>
//! comp_op   ::= lt | gt
//! const_v   ::= range(-0.07, 0.07, 0.005)
//! ```
//!
//! Nonterminals are written in angle brackets, everything else on the
//! right-hand side is a whitespace separated terminal token. The first rule
//! declared is the start rule. `range(lo, hi, step)` expands to one terminal
//! production per value `lo + k * step < hi`, in ascending order.

mod decode;
mod genotype;
mod parse;

use std::collections::HashMap;
use std::fmt;

pub use decode::{decode, DecodeFailure, Derivation, DerivationNode};
pub use genotype::Genotype;
pub use parse::parse_grammar;

/// Default upper bound (exclusive) for codon values.
pub const DEFAULT_CODON_MAX: u32 = 65_536;
/// Default cap on nonterminal expansions during decoding.
pub const DEFAULT_MAX_EXPANSIONS: usize = 10_000;

/// A symbol on the right-hand side of a production.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(String),
    /// Index of the referenced rule in [`Grammar::rules`].
    Rule(usize),
}

pub type Production = Vec<Symbol>;

/// Half-open arithmetic progression of constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRange {
    pub low: f64,
    pub high: f64,
    pub step: f64,
}

impl ConstantRange {
    pub fn new(low: f64, high: f64, step: f64) -> Option<Self> {
        let range = ConstantRange { low, high, step };
        (low.is_finite() && high.is_finite() && step.is_finite() && step > 0.0 && low < high)
            .then_some(range)
    }

    /// Decimal places kept when rounding enumerated values, so that
    /// `-0.07 + 28 * 0.005` compares equal to `0.07`.
    fn decimals(&self) -> i32 {
        ((-self.step.log10()).ceil().max(0.0) as i32 + 6).min(15)
    }

    fn value_at(&self, k: usize) -> f64 {
        let scale = 10f64.powi(self.decimals());
        let v = ((self.low + k as f64 * self.step) * scale).round() / scale;
        if v == 0.0 {
            0.0
        } else {
            v
        }
    }

    /// All values `low + k * step` strictly below `high`.
    pub fn values(&self) -> Vec<f64> {
        (0..)
            .map(|k| self.value_at(k))
            .take_while(|v| *v < self.high)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub productions: Vec<Production>,
    /// Set when the whole right-hand side was a single `range(...)`.
    pub range: Option<ConstantRange>,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.productions == other.productions
    }
}

/// A context-free grammar with ordered rules and ordered productions.
#[derive(Debug, Clone)]
pub struct Grammar {
    rules: Vec<Rule>,
    index: HashMap<String, usize>,
    start: usize,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start && self.rules == other.rules
    }
}

impl Grammar {
    /// Builds a grammar, checking that every reference resolves and every
    /// rule has at least one production. The first rule is the start rule.
    pub(crate) fn from_rules(rules: Vec<Rule>) -> Self {
        let index = rules
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i))
            .collect();
        let grammar = Grammar {
            rules,
            index,
            start: 0,
        };
        grammar.assert_invariants();
        grammar
    }

    fn assert_invariants(&self) {
        assert!(!self.rules.is_empty(), "grammar without rules");
        for rule in &self.rules {
            assert!(
                !rule.productions.is_empty(),
                "rule <{}> is empty",
                rule.name
            );
            for sym in rule.productions.iter().flatten() {
                if let Symbol::Rule(i) = sym {
                    assert!(*i < self.rules.len(), "dangling rule index {i}");
                }
            }
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start(&self) -> &Rule {
        &self.rules[self.start]
    }

    pub(crate) fn start_index(&self) -> usize {
        self.start
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.index.get(name).map(|&i| &self.rules[i])
    }

    /// Largest production count over all rules.
    pub fn max_choices(&self) -> usize {
        self.rules
            .iter()
            .map(|r| r.productions.len())
            .max()
            .unwrap_or(0)
    }

    /// Every terminal token that can appear in a derivation.
    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.rules
            .iter()
            .flat_map(|r| r.productions.iter().flatten())
            .filter_map(|s| match s {
                Symbol::Terminal(t) => Some(t.as_str()),
                Symbol::Rule(_) => None,
            })
    }
}

impl fmt::Display for Grammar {
    /// Writes the grammar back in file syntax; `parse_grammar` reads it back
    /// into an equal grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            write!(f, "{} ::= ", rule.name)?;
            if let Some(r) = rule.range {
                writeln!(f, "range({}, {}, {})", r.low, r.high, r.step)?;
                continue;
            }
            for (i, prod) in rule.productions.iter().enumerate() {
                if i > 0 {
                    f.write_str(" | ")?;
                }
                for (j, sym) in prod.iter().enumerate() {
                    if j > 0 {
                        f.write_str(" ")?;
                    }
                    match sym {
                        Symbol::Terminal(t) => f.write_str(t)?,
                        Symbol::Rule(k) => write!(f, "<{}>", self.rules[*k].name)?,
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integer-scaled loop, independent of the floating-point enumeration.
    fn count_by_integer_loop(low_milli: i64, high_milli: i64, step_milli: i64) -> usize {
        let mut k = 0;
        while low_milli + k * step_milli < high_milli {
            k += 1;
        }
        k as usize
    }

    #[test]
    fn velocity_constants_enumerate_28_values() {
        let r = ConstantRange::new(-0.07, 0.07, 0.005).unwrap();
        let values = r.values();
        // scaled by 1e5 to stay integral
        assert_eq!(values.len(), count_by_integer_loop(-7000, 7000, 500));
        assert_eq!(values.len(), 28);
        assert_eq!(values[0], -0.07);
        assert!(*values.last().unwrap() < 0.07);
        assert!(values.contains(&0.0));
    }

    #[test]
    fn shipped_range_sizes() {
        let cases = [
            ((-4.8, 4.8, 0.5), (-4800, 4800, 500)),
            ((-5.0, 5.0, 0.5), (-5000, 5000, 500)),
            ((-0.418, 0.418, 0.01), (-418, 418, 10)),
            ((-0.836, 0.836, 0.01), (-836, 836, 10)),
            ((-1.2, 0.6, 0.05), (-1200, 600, 50)),
            ((-1.0, 1.0, 0.001), (-1000, 1000, 1)),
        ];
        for ((lo, hi, st), (a, b, c)) in cases {
            let r = ConstantRange::new(lo, hi, st).unwrap();
            assert_eq!(
                r.values().len(),
                count_by_integer_loop(a, b, c),
                "{lo} {hi} {st}"
            );
        }
        assert_eq!(
            ConstantRange::new(-1.0, 1.0, 0.001).unwrap().values().len(),
            2000
        );
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(ConstantRange::new(1.0, 1.0, 0.1).is_none());
        assert!(ConstantRange::new(0.0, 1.0, 0.0).is_none());
        assert!(ConstantRange::new(0.0, 1.0, -0.1).is_none());
    }
}
