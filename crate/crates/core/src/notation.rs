//! Parser for the `name(arg, key=value)` strings used to select a Bernstein
//! function or a correlation measure, e.g. `relativistic(1/2, m=1.0)`.

use crate::error::{invalid, Result};
use crate::rational::{parse_rational, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCall {
    pub name: String,
    pub positional: Vec<Q>,
    pub named: Vec<(String, Q)>,
}

impl FamilyCall {
    pub fn parse(text: &str) -> Result<Self> {
        let s = text.trim();
        let (name, body) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .filter(|&c| c == s.len() - 1 && c > open)
                    .ok_or_else(|| invalid(format!("unbalanced parentheses in `{s}`")))?;
                (&s[..open], &s[open + 1..close])
            }
            None => (s, ""),
        };
        let name = name.trim().to_ascii_lowercase().replace('-', "_");
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(invalid(format!("bad family name in `{s}`")));
        }
        let mut positional = Vec::new();
        let mut named = Vec::new();
        for raw in body.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            match raw.split_once('=') {
                Some((k, v)) => named.push((k.trim().to_ascii_lowercase(), parse_rational(v)?)),
                None => {
                    if !named.is_empty() {
                        return Err(invalid(format!(
                            "positional argument after keyword argument in `{s}`"
                        )));
                    }
                    positional.push(parse_rational(raw)?)
                }
            }
        }
        Ok(Self {
            name,
            positional,
            named,
        })
    }

    /// Argument by keyword, or by position when the keyword is absent.
    pub fn arg(&self, key: &str, position: usize) -> Option<&Q> {
        self.named
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .or_else(|| self.positional.get(position))
    }

    pub fn require(&self, key: &str, position: usize) -> Result<&Q> {
        self.arg(key, position)
            .ok_or_else(|| invalid(format!("`{}` needs argument `{key}`", self.name)))
    }

    pub fn check_arity(&self, allowed: &[&str]) -> Result<()> {
        if self.positional.len() > allowed.len() {
            return Err(invalid(format!(
                "`{}` takes at most {} arguments",
                self.name,
                allowed.len()
            )));
        }
        for (k, _) in &self.named {
            if !allowed.contains(&k.as_str()) {
                return Err(invalid(format!("`{}` has no argument `{k}`", self.name)));
            }
        }
        Ok(())
    }
}
