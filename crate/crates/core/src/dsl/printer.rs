use std::fmt::Write;

use crate::kernel::Value;
use crate::tgg::{Direction, DomainPattern, Expr, Operand};

use super::RuleDocument;

/// Prints `doc` in canonical form. `parse(print(doc))` equals `doc`.
pub fn print_rules(doc: &RuleDocument) -> String {
    let mut out = String::new();
    for (i, r) in doc.rules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "rule {} {{", r.name);
        domain(&mut out, "source", &r.source);
        if !r.corr.is_empty() {
            out.push_str("  corr {\n");
            for c in &r.corr {
                let _ = writeln!(
                    out,
                    "    {} {}:{} (src: {}; tgt: {});",
                    if c.create { "new" } else { "ctx" },
                    c.var,
                    c.corr_type,
                    c.source.join(", "),
                    c.target.join(", ")
                );
            }
            out.push_str("  }\n");
        }
        domain(&mut out, "target", &r.target);
        if !r.derivations.is_empty() {
            out.push_str("  attr {\n");
            for d in &r.derivations {
                let dir = if d.direction == Direction::Forward {
                    "fwd"
                } else {
                    "bwd"
                };
                let _ = writeln!(out, "    {dir} {}.{} := {};", d.var, d.attr, expr(&d.expr));
            }
            out.push_str("  }\n");
        }
        if !r.constraints.is_empty() {
            out.push_str("  where {\n");
            for c in &r.constraints {
                let rhs = match &c.rhs {
                    Operand::Literal(v) => literal(v),
                    Operand::Attr { var, attr } => format!("{var}.{attr}"),
                };
                let _ = writeln!(out, "    {}.{} == {rhs};", c.var, c.attr);
            }
            out.push_str("  }\n");
        }
        if let Some(a) = &r.aggregate {
            let _ = writeln!(
                out,
                "  aggregate {{\n    by {}.{};\n    count {}.{};\n  }}",
                a.key_var, a.key_attr, a.count_var, a.count_attr
            );
        }
        out.push_str("}\n");
    }
    out
}

fn domain(out: &mut String, name: &str, pat: &DomainPattern) {
    if pat.nodes.is_empty() && pat.edges.is_empty() {
        return;
    }
    let _ = writeln!(out, "  {name} {{");
    for n in &pat.nodes {
        let _ = writeln!(
            out,
            "    {} {}:{};",
            if n.create { "new" } else { "ctx" },
            n.var,
            n.type_name
        );
    }
    for e in &pat.edges {
        let _ = writeln!(out, "    edge {}.{} -> {};", e.from, e.reference, e.to);
    }
    out.push_str("  }\n");
}

fn expr(e: &Expr) -> String {
    match e {
        Expr::Literal(v) => literal(v),
        Expr::Attr { var, attr } => format!("{var}.{attr}"),
        Expr::Concat(parts) => parts.iter().map(expr).collect::<Vec<_>>().join(" + "),
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Text(s) => {
            let escaped = s
                .replace('\\', "\\\\")
                .replace('"', "\\\"")
                .replace('\n', "\\n");
            format!("\"{escaped}\"")
        }
        other => other.to_string(),
    }
}
