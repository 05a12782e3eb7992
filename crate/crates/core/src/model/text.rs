//! Tree text format: `tree := '(' labelset tree* ')'`, `labelset := '{' [sym (',' sym)*] '}'`.

use std::fmt;

use thiserror::Error;

use super::{LabelSet, PropSymbol, RootedTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, message: impl fmt::Display) -> Self {
        Self {
            line,
            column,
            message: message.to_string(),
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn location(&self) -> (usize, usize) {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
        (line, column)
    }

    fn error(&self, msg: impl fmt::Display) -> SyntaxError {
        let (l, c) = self.location();
        SyntaxError::new(l, c, msg)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    fn symbol(&mut self) -> Result<PropSymbol, SyntaxError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_' || c == ':'))
            .map_or(rest.len(), |(i, _)| i);
        let text = &rest[..len];
        let sym = PropSymbol::new(text).map_err(|_| {
            if text.is_empty() {
                self.error("expected a proposition symbol")
            } else {
                self.error(format!("invalid proposition symbol '{text}'"))
            }
        })?;
        self.pos += len;
        Ok(sym)
    }

    fn labelset(&mut self) -> Result<LabelSet, SyntaxError> {
        self.expect('{')?;
        let mut set = LabelSet::new();
        if self.peek() == Some('}') {
            self.pos += 1;
            return Ok(set);
        }
        loop {
            set.insert(self.symbol()?);
            match self.peek() {
                Some(',') => self.pos += 1,
                Some('}') => {
                    self.pos += 1;
                    return Ok(set);
                }
                _ => return Err(self.error("expected ',' or '}'")),
            }
        }
    }

    fn tree(&mut self, out: &mut RootedTree, parent: Option<usize>) -> Result<(), SyntaxError> {
        self.expect('(')?;
        let labels = self.labelset()?;
        let id = match parent {
            None => {
                out.set_labels(0, labels);
                0
            }
            Some(p) => {
                let id = out.len();
                out.attach(p, &RootedTree::leaf(labels));
                id
            }
        };
        while self.peek() == Some('(') {
            self.tree(out, Some(id))?;
        }
        self.expect(')')
    }
}

/// Parses one tree. Node ids are assigned in preorder of the text.
pub fn parse_tree(text: &str) -> Result<RootedTree, SyntaxError> {
    let mut cur = Cursor { src: text, pos: 0 };
    let mut tree = RootedTree::leaf(LabelSet::new());
    cur.tree(&mut tree, None)?;
    if let Some(c) = cur.peek() {
        return Err(cur.error(format!("unexpected '{c}' after tree")));
    }
    Ok(tree)
}

fn write_labels(labels: &LabelSet, out: &mut String) {
    out.push('{');
    for (i, s) in labels.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(s.as_str());
    }
    out.push('}');
}

fn canonical_at(tree: &RootedTree, v: usize) -> String {
    let mut out = String::from("(");
    write_labels(tree.labels(v), &mut out);
    let mut kids: Vec<String> = tree.children(v).iter().map(|&c| canonical_at(tree, c)).collect();
    kids.sort_unstable();
    for k in kids {
        out.push(' ');
        out.push_str(&k);
    }
    out.push(')');
    out
}

/// Canonical serialization: sorted labels, children sorted by their canonical text.
pub fn serialize_tree(tree: &RootedTree) -> String {
    canonical_at(tree, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::labels;

    #[test]
    fn parse_examples() {
        let t = parse_tree("({p} ({q}) ({}))").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.labels(0), &labels(["p"]));
        assert_eq!(t.children(0), &[1, 2]);
        assert_eq!(t.labels(1), &labels(["q"]));

        let t = parse_tree("({})").unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.labels(0).is_empty());

        let t = parse_tree("({q, p})").unwrap();
        assert_eq!(serialize_tree(&t), "({p,q})");
    }

    #[test]
    fn variable_labels_round_trip() {
        let t = parse_tree("({x:x} ({X:Y,p}))").unwrap();
        assert_eq!(serialize_tree(&t), "({x:x} ({X:Y,p}))");
    }

    #[test]
    fn canonical_children_order() {
        let a = parse_tree("({p} ({}) ({q} ({})))").unwrap();
        let b = parse_tree("({p}\n  ({q} ({}))\n  ({}))").unwrap();
        assert_eq!(serialize_tree(&a), serialize_tree(&b));
    }

    #[test]
    fn syntax_errors_carry_location() {
        let e = parse_tree("({p}\n  ({q)").unwrap_err();
        assert_eq!((e.line, e.column), (2, 6));
        assert!(parse_tree("({1p})").is_err());
        assert!(parse_tree("({}) ({})").is_err());
        assert!(parse_tree("").is_err());
    }
}
