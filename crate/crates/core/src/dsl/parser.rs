use crate::kernel::Value;
use crate::tgg::{
    Aggregation, Constraint, CorrNode, Derivation, Direction, DomainPattern, Expr, Operand,
    PatternEdge, PatternNode, TripleRule,
};

use super::lexer::{Pos, Tok, Token};
use super::{DiagnosticKind, ParseDiagnostic, RuleSpans};

type PResult<T> = Result<T, ParseDiagnostic>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    at: usize,
}

/// A parsed rule before type resolution.
pub(crate) struct RawRule {
    pub rule: TripleRule,
    pub spans: RuleSpans,
    pub has_corr_section: bool,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, at: 0 }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.at.min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseDiagnostic::error(
            DiagnosticKind::SyntaxError,
            msg,
            self.peek().pos,
        ))
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, p: &str) -> PResult<Pos> {
        if self.peek().tok == Tok::Punct(punct(p)) {
            Ok(self.next().pos)
        } else {
            self.err(format!(
                "expected `{p}`, found {}",
                Self::describe(&self.peek().tok)
            ))
        }
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.peek().tok == Tok::Punct(punct(p)) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                let pos = self.next().pos;
                Ok((s, pos))
            }
            other => self.err(format!(
                "expected identifier, found {}",
                Self::describe(&other)
            )),
        }
    }

    fn keyword(&mut self, options: &[&str]) -> PResult<(String, Pos)> {
        match &self.peek().tok {
            Tok::Ident(s) if options.contains(&s.as_str()) => self.ident(),
            other => self.err(format!(
                "expected one of {}, found {}",
                options.join(", "),
                Self::describe(other)
            )),
        }
    }

    pub fn document(&mut self) -> PResult<Vec<RawRule>> {
        let mut rules = Vec::new();
        while self.peek().tok != Tok::Eof {
            rules.push(self.rule()?);
        }
        Ok(rules)
    }

    fn rule(&mut self) -> PResult<RawRule> {
        self.keyword(&["rule"])?;
        let (name, pos) = self.ident()?;
        let mut rule = TripleRule {
            name,
            source: DomainPattern::default(),
            corr: Vec::new(),
            target: DomainPattern::default(),
            derivations: Vec::new(),
            constraints: Vec::new(),
            aggregate: None,
        };
        let mut spans = RuleSpans {
            rule: pos,
            ..RuleSpans::default()
        };
        let mut has_corr_section = false;
        let mut seen = Vec::new();
        self.expect("{")?;
        while !self.eat("}") {
            let (section, spos) =
                self.keyword(&["source", "corr", "target", "attr", "where", "aggregate"])?;
            if seen.contains(&section) {
                return Err(ParseDiagnostic::error(
                    DiagnosticKind::SyntaxError,
                    format!("section {section} given twice"),
                    spos,
                ));
            }
            seen.push(section.clone());
            self.expect("{")?;
            match section.as_str() {
                "source" => rule.source = self.domain(&mut spans)?,
                "target" => rule.target = self.domain(&mut spans)?,
                "corr" => {
                    has_corr_section = true;
                    while !self.eat("}") {
                        rule.corr.push(self.corr_node(&mut spans)?);
                    }
                }
                "attr" => {
                    while !self.eat("}") {
                        rule.derivations.push(self.derivation()?);
                    }
                }
                "where" => {
                    while !self.eat("}") {
                        rule.constraints.push(self.constraint()?);
                    }
                }
                _ => {
                    self.keyword(&["by"])?;
                    let (key_var, key_attr) = self.attr_ref()?;
                    self.expect(";")?;
                    self.keyword(&["count"])?;
                    let (count_var, count_attr) = self.attr_ref()?;
                    self.expect(";")?;
                    self.expect("}")?;
                    rule.aggregate = Some(Aggregation {
                        key_var,
                        key_attr,
                        count_var,
                        count_attr,
                    });
                }
            }
        }
        Ok(RawRule {
            rule,
            spans,
            has_corr_section,
        })
    }

    fn domain(&mut self, spans: &mut RuleSpans) -> PResult<DomainPattern> {
        let mut pat = DomainPattern::default();
        while !self.eat("}") {
            let (kw, pos) = self.keyword(&["ctx", "new", "edge"])?;
            if kw == "edge" {
                let (from, reference) = self.attr_ref()?;
                self.expect("->")?;
                let (to, _) = self.ident()?;
                self.expect(";")?;
                let e = PatternEdge {
                    from,
                    reference,
                    to,
                };
                spans.edges.push((e.clone(), pos));
                pat.edges.push(e);
            } else {
                let (var, vpos) = self.ident()?;
                self.expect(":")?;
                let (type_name, tpos) = self.ident()?;
                self.expect(";")?;
                spans.nodes.insert(var.clone(), vpos);
                spans.types.insert(var.clone(), tpos);
                pat.nodes.push(PatternNode {
                    var,
                    type_name,
                    create: kw == "new",
                });
            }
        }
        Ok(pat)
    }

    fn corr_node(&mut self, spans: &mut RuleSpans) -> PResult<CorrNode> {
        let (kw, _) = self.keyword(&["ctx", "new"])?;
        let (var, pos) = self.ident()?;
        self.expect(":")?;
        let (corr_type, _) = self.ident()?;
        self.expect("(")?;
        self.keyword(&["src"])?;
        self.expect(":")?;
        let source = self.ident_list()?;
        self.expect(";")?;
        self.keyword(&["tgt"])?;
        self.expect(":")?;
        let target = self.ident_list()?;
        self.expect(")")?;
        self.expect(";")?;
        spans.nodes.insert(var.clone(), pos);
        Ok(CorrNode {
            var,
            corr_type,
            create: kw == "new",
            source,
            target,
        })
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if !matches!(self.peek().tok, Tok::Ident(_)) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?.0);
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn attr_ref(&mut self) -> PResult<(String, String)> {
        let (var, _) = self.ident()?;
        self.expect(".")?;
        let (attr, _) = self.ident()?;
        Ok((var, attr))
    }

    fn derivation(&mut self) -> PResult<Derivation> {
        let (kw, _) = self.keyword(&["fwd", "bwd"])?;
        let (var, attr) = self.attr_ref()?;
        self.expect(":=")?;
        let expr = self.expr()?;
        self.expect(";")?;
        Ok(Derivation {
            direction: if kw == "fwd" {
                Direction::Forward
            } else {
                Direction::Backward
            },
            var,
            attr,
            expr,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut parts = vec![self.term()?];
        while self.eat("+") {
            parts.push(self.term()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::Concat(parts)
        })
    }

    fn term(&mut self) -> PResult<Expr> {
        if let Some(v) = self.literal()? {
            return Ok(Expr::Literal(v));
        }
        let (var, attr) = self.attr_ref()?;
        Ok(Expr::Attr { var, attr })
    }

    fn literal(&mut self) -> PResult<Option<Value>> {
        Ok(match self.peek().tok.clone() {
            Tok::Str(s) => {
                self.next();
                Some(Value::Text(s))
            }
            Tok::Int(n) => {
                self.next();
                Some(Value::Int(n))
            }
            Tok::Punct("-") => {
                self.next();
                match self.peek().tok {
                    Tok::Int(n) => {
                        self.next();
                        Some(Value::Int(-n))
                    }
                    _ => return self.err("expected integer after `-`"),
                }
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.next();
                Some(Value::Bool(s == "true"))
            }
            _ => None,
        })
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        let (var, attr) = self.attr_ref()?;
        self.expect("==")?;
        let rhs = match self.literal()? {
            Some(v) => Operand::Literal(v),
            None => {
                let (var, attr) = self.attr_ref()?;
                Operand::Attr { var, attr }
            }
        };
        self.expect(";")?;
        Ok(Constraint { var, attr, rhs })
    }
}

fn punct(p: &str) -> &'static str {
    [
        "->", ":=", "==", "{", "}", "(", ")", ";", ":", ",", ".", "+", "-",
    ]
    .into_iter()
    .find(|q| *q == p)
    .expect("known punctuation")
}
