use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// One model term: a single column (main effect) or the interaction of
/// several columns, in the order written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term(pub Vec<String>);

impl Term {
    pub fn columns(&self) -> &[String] {
        &self.0
    }

    fn key(&self) -> BTreeSet<&str> {
        self.0.iter().map(String::as_str).collect()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(":"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub response: String,
    pub terms: Vec<Term>,
    pub intercept: bool,
}

impl ModelSpec {
    pub fn new(response: impl Into<String>, terms: Vec<Term>, intercept: bool) -> Result<Self> {
        let spec = ModelSpec {
            response: response.into(),
            terms,
            intercept,
        };
        spec.check_duplicates()?;
        Ok(spec)
    }

    fn check_duplicates(&self) -> Result<()> {
        let mut seen = Vec::new();
        for t in &self.terms {
            let key = t.key();
            if key.len() != t.0.len() {
                return Err(Error::Parse(format!("term `{t}` repeats a column")));
            }
            if seen.contains(&key) {
                return Err(Error::Parse(format!("duplicate term `{t}`")));
            }
            seen.push(key);
        }
        Ok(())
    }

    /// Parses `y ~ a + b + a:b`. The intercept is implicit; `- 1` or `+ 0`
    /// removes it. `a*b` expands to `a + b + a:b`.
    pub fn parse(formula: &str) -> Result<Self> {
        let (lhs, rhs) = formula
            .split_once('~')
            .ok_or_else(|| Error::Parse(format!("formula `{formula}` has no `~`")))?;
        let response = lhs.trim();
        if !is_name(response) {
            return Err(Error::Parse(format!("bad response name `{response}`")));
        }

        let mut intercept = true;
        let mut terms: Vec<Term> = Vec::new();
        let push = |t: Term, terms: &mut Vec<Term>| {
            if !terms.iter().any(|u| u.key() == t.key()) {
                terms.push(t);
            }
        };
        for (sign, raw) in split_signed(rhs)? {
            let raw = raw.trim();
            match (sign, raw) {
                ('-', "1") | ('+', "0") => intercept = false,
                ('+', "1") => intercept = true,
                ('-', other) => {
                    return Err(Error::Parse(format!("cannot remove term `{other}`")));
                }
                (_, expr) => {
                    if expr.contains('*') {
                        let parts: Vec<&str> = expr.split('*').map(str::trim).collect();
                        check_names(&parts)?;
                        for mask in 1u32..(1 << parts.len()) {
                            let cols = parts
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, s)| s.to_string())
                                .collect();
                            push(Term(cols), &mut terms);
                        }
                    } else {
                        let parts: Vec<&str> = expr.split(':').map(str::trim).collect();
                        check_names(&parts)?;
                        let t = Term(parts.iter().map(|s| s.to_string()).collect());
                        if terms.iter().any(|u| u.key() == t.key()) {
                            return Err(Error::Parse(format!("duplicate term `{t}`")));
                        }
                        terms.push(t);
                    }
                }
            }
        }
        // expanded terms are ordered by interaction order
        terms.sort_by_key(|t| t.0.len());
        let spec = ModelSpec {
            response: response.to_string(),
            terms,
            intercept,
        };
        spec.check_duplicates()?;
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response)?;
        let mut parts: Vec<String> = self.terms.iter().map(Term::to_string).collect();
        if !self.intercept {
            parts.push("-1".into());
        }
        if parts.is_empty() {
            parts.push("1".into());
        }
        write!(f, "{}", parts.join(" + ").replace("+ -1", "- 1"))
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty()
        && !s.chars().next().unwrap().is_ascii_digit()
        && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

fn check_names(parts: &[&str]) -> Result<()> {
    for p in parts {
        if !is_name(p) {
            return Err(Error::Parse(format!("bad term component `{p}`")));
        }
    }
    Ok(())
}

fn split_signed(rhs: &str) -> Result<Vec<(char, &str)>> {
    let mut out = Vec::new();
    let mut sign = '+';
    let mut start = 0;
    for (i, c) in rhs.char_indices() {
        if c == '+' || c == '-' {
            let piece = rhs[start..i].trim();
            if piece.is_empty() {
                if !out.is_empty() || i != rhs.len() - rhs.trim_start().len() {
                    return Err(Error::Parse(format!("empty term in `{rhs}`")));
                }
            } else {
                out.push((sign, piece));
            }
            sign = c;
            start = i + 1;
        }
    }
    let last = rhs[start..].trim();
    if last.is_empty() {
        return Err(Error::Parse(format!("empty term in `{rhs}`")));
    }
    out.push((sign, last));
    Ok(out)
}
