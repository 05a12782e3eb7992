//! Recursive-descent parsers for MSO formulas, GML formulas and GMSC programs.
//!
//! `|` binds weaker than `&`, `!` binds tightest, and quantifier bodies extend as
//! far to the right as possible.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{PropSymbol, SyntaxError, VarKind};

use super::{Gml, GmscProgram, LogicError, Mso, Pred};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Bang,
    Amp,
    Bar,
    Geq,
    Turnstile,
    Colon,
    Semi,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(n) => format!("'{n}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::Eq => "'='".into(),
            Tok::Bang => "'!'".into(),
            Tok::Amp => "'&'".into(),
            Tok::Bar => "'|'".into(),
            Tok::Geq => "'>='".into(),
            Tok::Turnstile => "':-'".into(),
            Tok::Colon => "':'".into(),
            Tok::Semi => "';'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, SyntaxError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, k) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut n: usize = 0;
            while let Some(&c) = chars.peek() {
                if let Some(d) = c.to_digit(10) {
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d as usize))
                        .ok_or_else(|| SyntaxError::new(l, k, "number too large"))?;
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            Tok::Num(n)
        } else {
            bump(&mut chars);
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '=' => Tok::Eq,
                '!' | '~' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Bar,
                ';' => Tok::Semi,
                '>' if chars.peek() == Some(&'=') => {
                    bump(&mut chars);
                    Tok::Geq
                }
                ':' if chars.peek() == Some(&'-') => {
                    bump(&mut chars);
                    Tok::Turnstile
                }
                ':' => Tok::Colon,
                other => return Err(SyntaxError::new(l, k, format!("unexpected character '{other}'"))),
            }
        };
        out.push((tok, l, k));
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    /// Quantifier scope, innermost last.
    scope: Vec<(String, VarKind)>,
    /// Schema variables recognised inside GML bodies.
    schema_vars: BTreeSet<String>,
}

impl Parser {
    fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Self {
            toks: lex(src)?,
            pos: 0,
            scope: Vec::new(),
            schema_vars: BTreeSet::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, off: usize) -> &Tok {
        &self.toks[(self.pos + off).min(self.toks.len() - 1)].0
    }

    fn error(&self, msg: impl Into<String>) -> SyntaxError {
        let (_, l, c) = &self.toks[self.pos];
        SyntaxError::new(*l, *c, msg.into())
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.next();
                Ok(s)
            }
            t => Err(self.error(format!("expected {what}, found {}", t.describe()))),
        }
    }

    fn end(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => Err(self.error(format!("unexpected {} after formula", t.describe()))),
        }
    }

    fn bound_kind(&self, v: &str) -> Option<VarKind> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|&(_, k)| k)
    }

    fn fo_var(&mut self) -> Result<String, LogicError> {
        let at = self.pos;
        let v = self.ident("a variable")?;
        if self.bound_kind(&v) == Some(VarKind::SecondOrder) {
            self.pos = at;
            return Err(LogicError::VariableKind(v));
        }
        Ok(v)
    }

    // ---- MSO ----

    fn mso(&mut self) -> Result<Mso, LogicError> {
        let mut f = self.mso_and()?;
        while *self.peek() == Tok::Bar {
            self.next();
            f = Mso::or(f, self.mso_and()?);
        }
        Ok(f)
    }

    fn mso_and(&mut self) -> Result<Mso, LogicError> {
        let mut f = self.mso_unary()?;
        while *self.peek() == Tok::Amp {
            self.next();
            f = Mso::and(f, self.mso_unary()?);
        }
        Ok(f)
    }

    fn mso_unary(&mut self) -> Result<Mso, LogicError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.next();
                Ok(Mso::not(self.mso_unary()?))
            }
            Tok::Ident(kw) if matches!(kw.as_str(), "exists" | "exists2" | "forall") => {
                self.next();
                let v = self.ident("a variable")?;
                self.expect(Tok::Dot)?;
                let kind = if kw == "exists2" {
                    VarKind::SecondOrder
                } else {
                    VarKind::FirstOrder
                };
                self.scope.push((v.clone(), kind));
                let body = self.mso();
                self.scope.pop();
                let body = body?;
                Ok(match kw.as_str() {
                    "exists" => Mso::exists(&v, body),
                    "exists2" => Mso::exists_set(&v, body),
                    _ => Mso::forall(&v, body),
                })
            }
            _ => self.mso_primary(),
        }
    }

    fn mso_primary(&mut self) -> Result<Mso, LogicError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.next();
                let f = self.mso()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) if !is_keyword(&name) => {
                match self.peek_at(1) {
                    Tok::Eq => {
                        let a = self.fo_var()?;
                        self.next();
                        let b = self.fo_var()?;
                        Ok(Mso::Eq(a, b))
                    }
                    Tok::LParen => {
                        self.next();
                        self.next();
                        let a = self.fo_var()?;
                        if *self.peek() == Tok::Comma {
                            if name != "E" {
                                return Err(self
                                    .error(format!("only E takes two arguments, not {name}"))
                                    .into());
                            }
                            self.next();
                            let b = self.fo_var()?;
                            self.expect(Tok::RParen)?;
                            return Ok(Mso::Edge(a, b));
                        }
                        self.expect(Tok::RParen)?;
                        let pred = match self.bound_kind(&name) {
                            Some(VarKind::SecondOrder) => Pred::SetVar(name),
                            Some(VarKind::FirstOrder) => {
                                return Err(LogicError::VariableKind(name));
                            }
                            None => Pred::Prop(PropSymbol::new(name.as_str()).map_err(|_| {
                                self.error(format!("invalid proposition symbol '{name}'"))
                            })?),
                        };
                        Ok(Mso::Atom { pred, var: a })
                    }
                    _ => {
                        self.next();
                        Err(self
                            .error(format!("expected '(' or '=' after '{name}'"))
                            .into())
                    }
                }
            }
            t => Err(self
                .error(format!("expected a formula, found {}", t.describe()))
                .into()),
        }
    }

    // ---- GML ----

    fn gml(&mut self) -> Result<Gml, SyntaxError> {
        let mut f = self.gml_and()?;
        while *self.peek() == Tok::Bar {
            self.next();
            f = Gml::or(f, self.gml_and()?);
        }
        Ok(f)
    }

    fn gml_and(&mut self) -> Result<Gml, SyntaxError> {
        let mut f = self.gml_unary()?;
        while *self.peek() == Tok::Amp {
            self.next();
            f = Gml::and(f, self.gml_unary()?);
        }
        Ok(f)
    }

    fn gml_unary(&mut self) -> Result<Gml, SyntaxError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.next();
                Ok(Gml::not(self.gml_unary()?))
            }
            Tok::LParen => {
                self.next();
                let f = self.gml()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(kw) if kw == "dia" => {
                self.next();
                self.expect(Tok::Geq)?;
                let k = match self.next() {
                    Tok::Num(k) => k,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected a grade after 'dia>='"));
                    }
                };
                Ok(Gml::dia(k, self.gml_unary()?))
            }
            Tok::Ident(name) if !is_keyword(&name) => {
                self.next();
                if self.schema_vars.contains(&name) {
                    Ok(Gml::Var(name))
                } else {
                    Ok(Gml::Prop(PropSymbol::new(name.as_str()).map_err(|_| {
                        self.error(format!("invalid proposition symbol '{name}'"))
                    })?))
                }
            }
            t => Err(self.error(format!("expected a formula, found {}", t.describe()))),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "exists" | "exists2" | "forall" | "dia")
}

/// Parses an MSO formula. Free variables of either kind are allowed; a predicate
/// name denotes a set variable iff an enclosing `exists2` binds it.
pub fn parse_mso(text: &str) -> Result<Mso, LogicError> {
    let mut p = Parser::new(text)?;
    let f = p.mso()?;
    p.end()?;
    Ok(f)
}

/// Parses a node property `φ(x)`: the only free variable allowed is `x`.
pub fn parse_node_property(text: &str) -> Result<Mso, LogicError> {
    let f = parse_mso(text)?;
    if let Some(v) = f.free_vars().keys().find(|v| v.as_str() != "x") {
        return Err(LogicError::UnboundVariable(v.clone()));
    }
    Ok(f)
}

pub fn parse_gml(text: &str) -> Result<Gml, LogicError> {
    let mut p = Parser::new(text)?;
    let f = p.gml()?;
    p.end()?;
    Ok(f)
}

/// Parses a GMSC program: statements `X(0) :- φ;`, `X :- ψ;` and a final
/// `appointed: X, ...;`. `#` starts a comment.
pub fn parse_gmsc(text: &str) -> Result<GmscProgram, LogicError> {
    let mut p = Parser::new(text)?;
    // First pass: collect declared heads so bodies can tell variables from propositions.
    let mut vars: Vec<String> = Vec::new();
    let mut at_start = true;
    for i in 0..p.toks.len() {
        if at_start {
            if let Tok::Ident(name) = &p.toks[i].0 {
                let is_head = matches!(p.toks.get(i + 1).map(|t| &t.0), Some(Tok::Turnstile))
                    || matches!(p.toks.get(i + 1).map(|t| &t.0), Some(Tok::LParen))
                        && matches!(p.toks.get(i + 4).map(|t| &t.0), Some(Tok::Turnstile));
                if is_head && !vars.contains(name) {
                    vars.push(name.clone());
                }
            }
        }
        at_start = p.toks[i].0 == Tok::Semi;
    }
    p.schema_vars = vars.iter().cloned().collect();

    let mut init: BTreeMap<String, Gml> = BTreeMap::new();
    let mut rules: BTreeMap<String, Gml> = BTreeMap::new();
    let mut appointed: Option<BTreeSet<String>> = None;
    while *p.peek() != Tok::Eof {
        let head_at = p.pos;
        let name = p.ident("a schema variable or 'appointed'")?;
        if name == "appointed" && *p.peek() == Tok::Colon {
            if appointed.is_some() {
                p.pos = head_at;
                return Err(p.error("duplicate 'appointed' list").into());
            }
            p.next();
            let mut set = BTreeSet::new();
            while let Tok::Ident(v) = p.peek().clone() {
                if !p.schema_vars.contains(&v) {
                    return Err(LogicError::UnboundVariable(v));
                }
                p.next();
                set.insert(v);
                if *p.peek() != Tok::Comma {
                    break;
                }
                p.next();
            }
            p.expect(Tok::Semi)?;
            appointed = Some(set);
            continue;
        }
        let is_init = *p.peek() == Tok::LParen;
        if is_init {
            p.next();
            if p.next() != Tok::Num(0) {
                p.pos -= 1;
                return Err(p.error("expected '0' in initial rule head").into());
            }
            p.expect(Tok::RParen)?;
        }
        p.expect(Tok::Turnstile)?;
        let body_at = p.pos;
        let body = p.gml()?;
        p.expect(Tok::Semi)?;
        if is_init {
            if let Some(v) = body.vars().into_iter().next() {
                p.pos = body_at;
                return Err(p
                    .error(format!("initial body of {name} mentions schema variable {v}"))
                    .into());
            }
        }
        let table = if is_init { &mut init } else { &mut rules };
        if table.insert(name.clone(), body).is_some() {
            p.pos = head_at;
            return Err(p.error(format!("duplicate rule for {name}")).into());
        }
    }
    for v in &vars {
        if !init.contains_key(v) {
            return Err(p.error(format!("{v} has no initial rule '{v}(0) :- ...'")).into());
        }
        if !rules.contains_key(v) {
            return Err(p.error(format!("{v} has no iteration rule '{v} :- ...'")).into());
        }
    }
    let Some(appointed) = appointed else {
        return Err(p.error("missing 'appointed: ...;' footer").into());
    };
    Ok(GmscProgram {
        init: vars.iter().map(|v| init[v].clone()).collect(),
        rules: vars.iter().map(|v| rules[v].clone()).collect(),
        vars,
        appointed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mso_examples() {
        assert_eq!(
            parse_mso("exists y. (E(x,y) & P(y))").unwrap(),
            Mso::exists("y", Mso::and(Mso::edge("x", "y"), Mso::prop("P", "y")))
        );
        assert_eq!(
            parse_mso("!(x = x)").unwrap(),
            Mso::not(Mso::eq("x", "x"))
        );
        assert_eq!(
            parse_mso("exists2 Y. Y(x)").unwrap(),
            Mso::exists_set("Y", Mso::member("Y", "x"))
        );
    }

    #[test]
    fn precedence_and_sugar() {
        assert_eq!(
            parse_mso("p(x) | q(x) & !p(x)").unwrap(),
            Mso::or(
                Mso::prop("p", "x"),
                Mso::and(Mso::prop("q", "x"), Mso::not(Mso::prop("p", "x")))
            )
        );
        assert_eq!(
            parse_mso("forall y. p(y)").unwrap(),
            Mso::forall("y", Mso::prop("p", "y"))
        );
        // the body extends to the right
        assert_eq!(
            parse_mso("exists y. E(x,y) & p(y)").unwrap(),
            parse_mso("exists y. (E(x,y) & p(y))").unwrap()
        );
    }

    #[test]
    fn mso_errors() {
        assert!(matches!(parse_mso("exists y."), Err(LogicError::Syntax(_))));
        assert!(matches!(
            parse_mso("exists2 Y. E(x,Y)"),
            Err(LogicError::VariableKind(_))
        ));
        assert!(matches!(
            parse_node_property("E(x,y)"),
            Err(LogicError::UnboundVariable(v)) if v == "y"
        ));
        match parse_mso("p(x) &\n  (q(x) q(x))") {
            Err(LogicError::Syntax(e)) => assert_eq!((e.line, e.column), (2, 9)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gml_examples() {
        assert_eq!(
            parse_gml("dia>=2 p").unwrap(),
            Gml::dia(2, Gml::prop("p"))
        );
        assert_eq!(
            parse_gml("dia>=1 (p & dia>=1 q)").unwrap(),
            Gml::dia(1, Gml::and(Gml::prop("p"), Gml::dia(1, Gml::prop("q"))))
        );
        assert!(parse_gml("dia>= p").is_err());
        assert!(parse_gml("dia>=1").is_err());
    }

    #[test]
    fn gmsc_examples() {
        let prog = parse_gmsc(
            "# reachability of p\nX(0) :- p;\nX :- (X | dia>=1 X);\nappointed: X;\n",
        )
        .unwrap();
        assert_eq!(prog.vars, vec!["X".to_string()]);
        assert_eq!(prog.init[0], Gml::prop("p"));
        assert_eq!(
            prog.rules[0],
            Gml::or(Gml::Var("X".into()), Gml::dia(1, Gml::Var("X".into())))
        );
        assert!(prog.appointed.contains("X"));

        let two = parse_gmsc("A(0) :- p; B(0) :- q; A :- dia>=1 B; B :- !A; appointed: A, B;")
            .unwrap();
        assert_eq!(two.vars, vec!["A".to_string(), "B".to_string()]);
        assert_eq!(two.rules[1], Gml::not(Gml::Var("A".into())));
    }

    #[test]
    fn gmsc_errors() {
        assert!(parse_gmsc("X(0) :- p; appointed: X;").is_err());
        assert!(parse_gmsc("X(0) :- X; X :- X; appointed: X;").is_err());
        assert!(matches!(
            parse_gmsc("X(0) :- p; X :- X; appointed: Y;"),
            Err(LogicError::UnboundVariable(v)) if v == "Y"
        ));
        assert!(parse_gmsc("X(0) :- p; X :- X;").is_err());
        assert!(parse_gmsc("X(1) :- p; X :- X; appointed: X;").is_err());
    }
}
