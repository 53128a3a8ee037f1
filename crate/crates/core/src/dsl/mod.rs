//! Textual rule language: parser with positioned diagnostics and a
//! canonicalizing printer.
//!
//! ```text
//! rule Name {
//!   source { ctx m:EjbModule; new ei:EjbInterface; edge sb.interfaces -> ei; }
//!   corr   { ctx cm:CorrModule (src: m; tgt: c); new ce:CorrEjbInterface (src: ei; tgt: i); }
//!   target { ctx c:Component; new i:Interface; edge c.provided -> i; }
//!   attr   { fwd i.uid := "i:" + ei.uid; bwd ei.name := i.name; }
//!   where  { m.state == "STARTED"; }
//!   aggregate { by ex.exception_type; count f.count; }
//! }
//! ```

mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::Metamodel;
use crate::tgg::{Domain, PatternEdge, SyncError, TripleRule};

pub use lexer::Pos;
pub use printer::print_rules;

/// The shipped rule set mapping the EJB-style model to the component model.
pub const BUILTIN_RULES: &str = include_str!("../../../../rules/ejb2comp.tgg");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    SyntaxError,
    UnknownNodeType,
    DanglingCorrReference,
    DomainMixup,
    /// Well-formed syntax that breaks a rule invariant (missing reference,
    /// disconnected pattern, ...).
    InvalidRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
#[error("{line}:{column}: {kind:?}: {message}")]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl ParseDiagnostic {
    pub(crate) fn error(kind: DiagnosticKind, message: impl Into<String>, pos: Pos) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            kind,
            message: message.into(),
            line: pos.line,
            column: pos.column,
        }
    }
}

/// Source positions of one rule's declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSpans {
    pub rule: Pos,
    /// Variable declarations, pattern and corr nodes alike.
    pub nodes: BTreeMap<String, Pos>,
    pub types: BTreeMap<String, Pos>,
    pub edges: Vec<(PatternEdge, Pos)>,
}

/// Parsed rules in file order. Equality ignores source positions.
#[derive(Debug, Clone, Default)]
pub struct RuleDocument {
    pub rules: Vec<TripleRule>,
    pub spans: Vec<RuleSpans>,
}

impl PartialEq for RuleDocument {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

impl fmt::Display for RuleDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_rules(self))
    }
}

/// Parses `text`, resolves node types against the two metamodels and checks
/// every rule invariant. Rules come back canonicalized: nodes, edges,
/// correspondence nodes, derivations and constraints sorted within their
/// sections; rule order is kept.
pub fn parse_rules(
    text: &str,
    source_mm: &Metamodel,
    target_mm: &Metamodel,
) -> Result<RuleDocument, Vec<ParseDiagnostic>> {
    let toks = lexer::lex(text).map_err(|d| vec![d])?;
    let raw = parser::Parser::new(toks).document().map_err(|d| vec![d])?;
    let mut diags = Vec::new();
    let mut doc = RuleDocument::default();
    for r in raw {
        let before = diags.len();
        resolve(&r, source_mm, target_mm, &mut diags);
        if diags.len() == before {
            if let Err(SyncError::MalformedRule { reason, .. }) =
                r.rule.validate(source_mm, target_mm)
            {
                diags.push(ParseDiagnostic::error(
                    DiagnosticKind::InvalidRule,
                    format!("rule {}: {reason}", r.rule.name),
                    r.spans.rule,
                ));
            }
        }
        let mut rule = r.rule;
        canonicalize(&mut rule);
        doc.rules.push(rule);
        doc.spans.push(r.spans);
    }
    if diags.is_empty() {
        if let Err(SyncError::MalformedRule { rule, reason }) =
            crate::tgg::validate_rule_set(&doc.rules, source_mm, target_mm)
        {
            let pos = doc
                .rules
                .iter()
                .position(|r| r.name == rule)
                .map(|i| doc.spans[i].rule)
                .unwrap_or_default();
            diags.push(ParseDiagnostic::error(
                DiagnosticKind::InvalidRule,
                format!("rule {rule}: {reason}"),
                pos,
            ));
        }
    }
    if diags.is_empty() {
        Ok(doc)
    } else {
        Err(diags)
    }
}

/// The shipped rule set, parsed against the built-in metamodels.
pub fn builtin_rules() -> Vec<TripleRule> {
    let src = crate::metamodels::build_source_metamodel();
    let tgt = crate::metamodels::build_target_metamodel();
    parse_rules(BUILTIN_RULES, &src, &tgt)
        .unwrap_or_else(|d| panic!("shipped rules do not parse: {d:?}"))
        .rules
}

fn resolve(
    r: &parser::RawRule,
    source_mm: &Metamodel,
    target_mm: &Metamodel,
    diags: &mut Vec<ParseDiagnostic>,
) {
    let rule = &r.rule;
    let at = |var: &str| r.spans.types.get(var).copied().unwrap_or(r.spans.rule);
    for (domain, own, other) in [
        (Domain::Source, source_mm, target_mm),
        (Domain::Target, target_mm, source_mm),
    ] {
        for n in &rule.pattern(domain).nodes {
            if own.has_type(&n.type_name) {
                continue;
            }
            let (kind, msg) = if other.has_type(&n.type_name) {
                (
                    DiagnosticKind::DomainMixup,
                    format!(
                        "{} belongs to {}, not to the {domain:?} pattern",
                        n.type_name, other.name
                    ),
                )
            } else {
                (
                    DiagnosticKind::UnknownNodeType,
                    format!("unknown type {}", n.type_name),
                )
            };
            diags.push(ParseDiagnostic::error(kind, msg, at(&n.var)));
        }
    }
    if !r.has_corr_section || !rule.corr.iter().any(|c| c.create) {
        diags.push(ParseDiagnostic::error(
            DiagnosticKind::DanglingCorrReference,
            format!("rule {} has no correspondence create node", rule.name),
            r.spans.rule,
        ));
    }
    for c in &rule.corr {
        let pos = r.spans.nodes.get(&c.var).copied().unwrap_or(r.spans.rule);
        for (domain, list) in [(Domain::Source, &c.source), (Domain::Target, &c.target)] {
            for v in list {
                if rule.pattern(domain).node(v).is_none() {
                    diags.push(ParseDiagnostic::error(
                        DiagnosticKind::DanglingCorrReference,
                        format!("{} links undeclared {domain:?} variable {v}", c.var),
                        pos,
                    ));
                }
            }
        }
    }
}

fn canonicalize(rule: &mut TripleRule) {
    for pat in [&mut rule.source, &mut rule.target] {
        pat.nodes.sort_by(|a, b| a.var.cmp(&b.var));
        pat.edges.sort();
    }
    rule.corr.sort_by(|a, b| a.var.cmp(&b.var));
    rule.derivations
        .sort_by(|a, b| (a.direction, &a.var, &a.attr).cmp(&(b.direction, &b.var, &b.attr)));
    rule.constraints
        .sort_by(|a, b| (&a.var, &a.attr).cmp(&(&b.var, &b.attr)));
}

#[cfg(test)]
mod tests;
