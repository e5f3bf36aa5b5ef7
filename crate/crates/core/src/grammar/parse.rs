use std::collections::HashMap;

use super::{ConstantRange, Grammar, Production, Rule, Symbol};
use crate::error::GrammarError;

/// Raw symbol before rule references are resolved.
enum RawSymbol {
    Terminal(String),
    Ref { name: String, line: usize },
}

struct RawRule {
    name: String,
    line: usize,
    productions: Vec<Vec<RawSymbol>>,
    range: Option<ConstantRange>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
}

/// Parses grammar text. Rule and production order follow the file.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut raw: Vec<RawRule> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (lineno, full_line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match full_line.find('#') {
            Some(i) => &full_line[..i],
            None => full_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let Some(sep) = line.find("::=") else {
            let col = line.len() - line.trim_start().len() + 1;
            return Err(syntax(line_no, col, "expected `name ::= productions`"));
        };
        let lhs = line[..sep].trim();
        let name = lhs
            .strip_prefix('<')
            .and_then(|s| s.strip_suffix('>'))
            .unwrap_or(lhs);
        if !is_ident(name) {
            return Err(syntax(line_no, 1, format!("invalid rule name `{lhs}`")));
        }
        if seen.contains_key(name) {
            return Err(GrammarError::DuplicateRule {
                rule: name.to_string(),
                line: line_no,
            });
        }
        let rhs_offset = sep + 3;
        let rhs = &line[rhs_offset..];
        if rhs.trim().is_empty() {
            return Err(GrammarError::EmptyRule {
                rule: name.to_string(),
                line: line_no,
            });
        }

        let mut productions = Vec::new();
        let mut whole_range = None;
        let alternatives: Vec<(usize, &str)> = split_alternatives(rhs, rhs_offset);
        let single = alternatives.len() == 1;
        for (col0, alt) in alternatives {
            let trimmed = alt.trim();
            if trimmed.is_empty() {
                return Err(syntax(line_no, col0 + 1, "empty alternative"));
            }
            let col = col0 + (alt.len() - alt.trim_start().len()) + 1;
            if let Some(args) = trimmed.strip_prefix("range(") {
                let range = parse_range(args, line_no, col)?;
                for v in range.values() {
                    productions.push(vec![RawSymbol::Terminal(format!("{v}"))]);
                }
                if single {
                    whole_range = Some(range);
                }
                continue;
            }
            productions.push(parse_symbols(trimmed, line_no, col)?);
        }

        seen.insert(name.to_string(), raw.len());
        raw.push(RawRule {
            name: name.to_string(),
            line: line_no,
            productions,
            range: whole_range,
        });
    }

    if raw.is_empty() {
        return Err(GrammarError::NoRules);
    }

    let mut rules = Vec::with_capacity(raw.len());
    for r in &raw {
        let mut productions: Vec<Production> = Vec::with_capacity(r.productions.len());
        for prod in &r.productions {
            let mut resolved = Vec::with_capacity(prod.len());
            for sym in prod {
                resolved.push(match sym {
                    RawSymbol::Terminal(t) => Symbol::Terminal(t.clone()),
                    RawSymbol::Ref { name, line } => match seen.get(name) {
                        Some(&i) => Symbol::Rule(i),
                        None => {
                            return Err(GrammarError::UndeclaredRule {
                                rule: r.name.clone(),
                                missing: name.clone(),
                                line: *line,
                            })
                        }
                    },
                });
            }
            productions.push(resolved);
        }
        if productions.is_empty() {
            return Err(GrammarError::EmptyRule {
                rule: r.name.clone(),
                line: r.line,
            });
        }
        rules.push(Rule {
            name: r.name.clone(),
            productions,
            range: r.range,
        });
    }
    Ok(Grammar::from_rules(rules))
}

/// Splits on `|`, returning each piece with its byte offset in the line.
fn split_alternatives(rhs: &str, offset: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in rhs.char_indices() {
        if c == '|' {
            out.push((offset + start, &rhs[start..i]));
            start = i + 1;
        }
    }
    out.push((offset + start, &rhs[start..]));
    out
}

fn parse_range(args: &str, line: usize, col: usize) -> Result<ConstantRange, GrammarError> {
    let Some(inner) = args.strip_suffix(')') else {
        return Err(syntax(line, col, "unterminated range(...)"));
    };
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(syntax(line, col, "range expects (low, high, step)"));
    }
    let mut nums = [0.0; 3];
    for (slot, p) in nums.iter_mut().zip(&parts) {
        *slot = p
            .parse::<f64>()
            .map_err(|_| syntax(line, col, format!("invalid number `{p}` in range")))?;
    }
    ConstantRange::new(nums[0], nums[1], nums[2])
        .ok_or_else(|| syntax(line, col, "range needs low < high and a positive step"))
}

fn parse_symbols(alt: &str, line: usize, col: usize) -> Result<Vec<RawSymbol>, GrammarError> {
    let mut symbols = Vec::new();
    for chunk in alt.split_whitespace() {
        let mut rest = chunk;
        while !rest.is_empty() {
            match rest.find('<') {
                Some(0) => {
                    let close = rest
                        .find('>')
                        .ok_or_else(|| syntax(line, col, format!("unclosed `<` in `{chunk}`")))?;
                    let name = &rest[1..close];
                    if !is_ident(name) {
                        return Err(syntax(line, col, format!("invalid reference `<{name}>`")));
                    }
                    symbols.push(RawSymbol::Ref {
                        name: name.to_string(),
                        line,
                    });
                    rest = &rest[close + 1..];
                }
                Some(i) => {
                    symbols.push(RawSymbol::Terminal(rest[..i].to_string()));
                    rest = &rest[i..];
                }
                None => {
                    symbols.push(RawSymbol::Terminal(rest.to_string()));
                    rest = "";
                }
            }
        }
    }
    Ok(symbols)
}
