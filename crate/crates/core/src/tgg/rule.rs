//! Declarative triple rules: a source pattern, a target pattern and the
//! correspondence nodes tying them together. Nodes are either context (must
//! already exist) or create (produced by the rule).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kernel::{AttrKind, Metamodel, Value};

use super::SyncError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

/// Forward propagates source changes to the target, backward the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn origin(self) -> Domain {
        match self {
            Direction::Forward => Domain::Source,
            Direction::Backward => Domain::Target,
        }
    }

    pub fn destination(self) -> Domain {
        match self {
            Direction::Forward => Domain::Target,
            Direction::Backward => Domain::Source,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternNode {
    pub var: String,
    pub type_name: String,
    pub create: bool,
}

/// `from.reference -> to`. An edge is created by the rule when either end is.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatternEdge {
    pub from: String,
    pub reference: String,
    pub to: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainPattern {
    pub nodes: Vec<PatternNode>,
    pub edges: Vec<PatternEdge>,
}

impl DomainPattern {
    pub fn node(&self, var: &str) -> Option<&PatternNode> {
        self.nodes.iter().find(|n| n.var == var)
    }

    pub fn create_vars(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.create)
            .map(|n| n.var.as_str())
            .collect()
    }

    pub fn is_create(&self, var: &str) -> bool {
        self.node(var).is_some_and(|n| n.create)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrNode {
    pub var: String,
    pub corr_type: String,
    pub create: bool,
    pub source: Vec<String>,
    pub target: Vec<String>,
}

impl CorrNode {
    pub fn side(&self, domain: Domain) -> &[String] {
        match domain {
            Domain::Source => &self.source,
            Domain::Target => &self.target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Literal(Value),
    Attr { var: String, attr: String },
    Concat(Vec<Expr>),
}

impl Expr {
    pub fn vars(&self) -> Vec<(&str, &str)> {
        match self {
            Expr::Literal(_) => Vec::new(),
            Expr::Attr { var, attr } => vec![(var.as_str(), attr.as_str())],
            Expr::Concat(parts) => parts.iter().flat_map(Expr::vars).collect(),
        }
    }
}

/// `direction var.attr := expr`; applied when propagating in `direction`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub direction: Direction,
    pub var: String,
    pub attr: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operand {
    Literal(Value),
    Attr { var: String, attr: String },
}

/// `var.attr == rhs`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub var: String,
    pub attr: String,
    pub rhs: Operand,
}

/// Many-to-one mapping: matches sharing the destination context and the key
/// attribute value collapse onto one image whose `count` attribute holds the
/// group size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregation {
    pub key_var: String,
    pub key_attr: String,
    pub count_var: String,
    pub count_attr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleRule {
    pub name: String,
    pub source: DomainPattern,
    pub corr: Vec<CorrNode>,
    pub target: DomainPattern,
    pub derivations: Vec<Derivation>,
    pub constraints: Vec<Constraint>,
    pub aggregate: Option<Aggregation>,
}

impl TripleRule {
    pub fn pattern(&self, domain: Domain) -> &DomainPattern {
        match domain {
            Domain::Source => &self.source,
            Domain::Target => &self.target,
        }
    }

    /// Panics on rules that were not validated.
    pub fn corr_create(&self) -> &CorrNode {
        self.corr
            .iter()
            .find(|c| c.create)
            .expect("validated rule has a corr create node")
    }

    pub fn corr_type(&self) -> &str {
        &self.corr_create().corr_type
    }

    pub fn domain_of(&self, var: &str) -> Option<Domain> {
        if self.source.node(var).is_some() {
            Some(Domain::Source)
        } else if self.target.node(var).is_some() {
            Some(Domain::Target)
        } else {
            None
        }
    }

    pub fn node(&self, var: &str) -> Option<&PatternNode> {
        self.source.node(var).or_else(|| self.target.node(var))
    }

    pub fn derivations_for(&self, direction: Direction) -> impl Iterator<Item = &Derivation> {
        self.derivations
            .iter()
            .filter(move |d| d.direction == direction)
    }

    /// Backward propagation (of deletions and attribute values) is enabled by
    /// declaring at least one backward derivation.
    pub fn propagates_backward(&self) -> bool {
        self.derivations_for(Direction::Backward).next().is_some()
    }

    /// The rule can create source elements only if it knows how to identify
    /// every one of them.
    pub fn creates_backward(&self) -> bool {
        self.aggregate.is_none()
            && self.source.create_vars().iter().all(|v| {
                self.derivations_for(Direction::Backward)
                    .any(|d| d.var == *v && d.attr == "uid")
            })
    }

    pub fn creates(&self, direction: Direction) -> bool {
        match direction {
            Direction::Forward => true,
            Direction::Backward => self.creates_backward(),
        }
    }

    pub(crate) fn validate(
        &self,
        source_mm: &Metamodel,
        target_mm: &Metamodel,
    ) -> Result<(), SyncError> {
        let fail = |reason: String| {
            Err(SyncError::MalformedRule {
                rule: self.name.clone(),
                reason,
            })
        };
        if self.name.is_empty() {
            return fail("empty rule name".into());
        }
        let mut vars = BTreeSet::new();
        for (domain, mm) in [(Domain::Source, source_mm), (Domain::Target, target_mm)] {
            let pat = self.pattern(domain);
            for n in &pat.nodes {
                if !vars.insert(n.var.as_str()) {
                    return fail(format!("variable {} declared twice", n.var));
                }
                if !mm.has_type(&n.type_name) {
                    return fail(format!("{} is not a {} type", n.type_name, mm.name));
                }
            }
            let mut contained = BTreeSet::new();
            for e in &pat.edges {
                let (Some(from), Some(to)) = (pat.node(&e.from), pat.node(&e.to)) else {
                    return fail(format!(
                        "edge {}.{} -> {} leaves its domain",
                        e.from, e.reference, e.to
                    ));
                };
                let Some(spec) = mm.reference(&from.type_name, &e.reference) else {
                    return fail(format!(
                        "{} has no reference {}",
                        from.type_name, e.reference
                    ));
                };
                if !mm.is_subtype(&to.type_name, &spec.target)
                    && !mm.is_subtype(&spec.target, &to.type_name)
                {
                    return fail(format!(
                        "{}.{} cannot reach {}",
                        from.type_name, e.reference, to.type_name
                    ));
                }
                if spec.containment && to.create && !contained.insert(e.to.as_str()) {
                    return fail(format!("{} has two containers", e.to));
                }
                if spec.containment && !to.create && from.create {
                    return fail(format!(
                        "created {} cannot contain context {}",
                        e.from, e.to
                    ));
                }
            }
            if !connected(pat) {
                return fail(format!("{domain:?} pattern is not connected"));
            }
        }

        let creates: Vec<&CorrNode> = self.corr.iter().filter(|c| c.create).collect();
        if creates.len() != 1 {
            return fail(format!(
                "expected one corr create node, found {}",
                creates.len()
            ));
        }
        for c in &self.corr {
            if !vars.insert(c.var.as_str()) {
                return fail(format!("variable {} declared twice", c.var));
            }
            for (domain, list) in [(Domain::Source, &c.source), (Domain::Target, &c.target)] {
                for v in list {
                    match self.pattern(domain).node(v) {
                        None => {
                            return fail(format!(
                                "{} refers to unknown {domain:?} variable {v}",
                                c.var
                            ))
                        }
                        Some(n) if n.create != c.create => {
                            return fail(format!("{} mixes context and create variable {v}", c.var))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        let corr = creates[0];
        fn as_set(v: &[String]) -> BTreeSet<&str> {
            v.iter().map(String::as_str).collect()
        }
        let src_creates: BTreeSet<&str> = self.source.create_vars().into_iter().collect();
        let tgt_creates: BTreeSet<&str> = self.target.create_vars().into_iter().collect();
        if src_creates.is_empty() {
            return fail("no source create node".into());
        }
        if as_set(&corr.source) != src_creates || as_set(&corr.target) != tgt_creates {
            return fail(format!("{} must link exactly the created nodes", corr.var));
        }
        for c in self.corr.iter().filter(|c| !c.create) {
            if c.source.is_empty() || c.target.is_empty() {
                return fail(format!("context link {} needs both sides", c.var));
            }
        }

        for d in &self.derivations {
            let dest = d.direction.destination();
            let Some(node) = self.pattern(dest).node(&d.var) else {
                return fail(format!(
                    "{} derivation writes {} outside its destination",
                    d.direction, d.var
                ));
            };
            let mm = if dest == Domain::Source {
                source_mm
            } else {
                target_mm
            };
            if d.attr == "uid" {
                if !node.create {
                    return fail(format!("uid of context node {} cannot be derived", d.var));
                }
            } else if mm.attribute(&node.type_name, &d.attr).is_none() {
                return fail(format!("{} has no attribute {}", node.type_name, d.attr));
            }
            for (v, a) in d.expr.vars() {
                self.check_attr_ref(v, a, source_mm, target_mm)
                    .or_else(&fail)?;
            }
        }
        for c in &self.constraints {
            self.check_attr_ref(&c.var, &c.attr, source_mm, target_mm)
                .or_else(&fail)?;
            if self.node(&c.var).is_some_and(|n| n.create)
                && self.domain_of(&c.var) == Some(Domain::Target)
            {
                // target create nodes are only bound in the backward direction
            }
            if let Operand::Attr { var, attr } = &c.rhs {
                self.check_attr_ref(var, attr, source_mm, target_mm)
                    .or_else(&fail)?;
            }
        }
        if let Some(a) = &self.aggregate {
            if !self.source.is_create(&a.key_var) {
                return fail(format!(
                    "aggregation key {} must be a created source node",
                    a.key_var
                ));
            }
            self.check_attr_ref(&a.key_var, &a.key_attr, source_mm, target_mm)
                .or_else(&fail)?;
            let Some(n) = self.target.node(&a.count_var).filter(|n| n.create) else {
                return fail(format!(
                    "aggregation count {} must be a created target node",
                    a.count_var
                ));
            };
            let kind = target_mm
                .attribute(&n.type_name, &a.count_attr)
                .map(|s| &s.kind);
            if kind != Some(&AttrKind::Integer) {
                return fail(format!(
                    "{}.{} is not an integer attribute",
                    a.count_var, a.count_attr
                ));
            }
        }
        Ok(())
    }

    fn check_attr_ref(
        &self,
        var: &str,
        attr: &str,
        source_mm: &Metamodel,
        target_mm: &Metamodel,
    ) -> Result<(), String> {
        let (node, mm) = match self.domain_of(var) {
            Some(Domain::Source) => (self.source.node(var).unwrap(), source_mm),
            Some(Domain::Target) => (self.target.node(var).unwrap(), target_mm),
            None => return Err(format!("unknown variable {var}")),
        };
        if attr == "uid" || mm.attribute(&node.type_name, attr).is_some() {
            Ok(())
        } else {
            Err(format!("{} has no attribute {attr}", node.type_name))
        }
    }
}

fn connected(pat: &DomainPattern) -> bool {
    let Some(first) = pat.nodes.first() else {
        return true;
    };
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &pat.edges {
        adj.entry(&e.from).or_default().push(&e.to);
        adj.entry(&e.to).or_default().push(&e.from);
    }
    let mut seen = BTreeSet::from([first.var.as_str()]);
    let mut stack = vec![first.var.as_str()];
    while let Some(v) = stack.pop() {
        for &w in adj.get(v).into_iter().flatten() {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == pat.nodes.len()
}

/// Cross-rule checks on a rule set: unique names and correspondence types,
/// and every context link naming a correspondence type some rule creates.
pub(crate) fn validate_rule_set(
    rules: &[TripleRule],
    source_mm: &Metamodel,
    target_mm: &Metamodel,
) -> Result<(), SyncError> {
    let mut names = BTreeSet::new();
    let mut corr_types: BTreeMap<&str, &CorrNode> = BTreeMap::new();
    for r in rules {
        r.validate(source_mm, target_mm)?;
        if !names.insert(r.name.as_str()) {
            return Err(SyncError::MalformedRule {
                rule: r.name.clone(),
                reason: "duplicate rule name".into(),
            });
        }
        let c = r.corr_create();
        if corr_types.insert(c.corr_type.as_str(), c).is_some() {
            return Err(SyncError::MalformedRule {
                rule: r.name.clone(),
                reason: format!("correspondence type {} created by two rules", c.corr_type),
            });
        }
    }
    for r in rules {
        for c in r.corr.iter().filter(|c| !c.create) {
            let Some(producer) = corr_types.get(c.corr_type.as_str()) else {
                return Err(SyncError::MalformedRule {
                    rule: r.name.clone(),
                    reason: format!("no rule creates {}", c.corr_type),
                });
            };
            if producer.source.len() != c.source.len() || producer.target.len() != c.target.len() {
                return Err(SyncError::MalformedRule {
                    rule: r.name.clone(),
                    reason: format!("{} does not match the shape of {}", c.var, c.corr_type),
                });
            }
        }
    }
    Ok(())
}
