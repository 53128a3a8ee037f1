//! Backtracking matcher for the origin side of a rule plus the destination
//! context reached through correspondence links.

use std::collections::BTreeSet;

use crate::kernel::{Model, Value};

use super::corr::{Binding, CorrespondenceModel};
use super::rule::{
    Constraint, CorrNode, Direction, Domain, Expr, Operand, PatternEdge, TripleRule,
};

pub(crate) struct Matcher<'a> {
    pub rule: &'a TripleRule,
    pub direction: Direction,
    pub source: &'a Model,
    pub target: &'a Model,
    pub corr: &'a CorrespondenceModel,
}

impl<'a> Matcher<'a> {
    pub fn model(&self, domain: Domain) -> &'a Model {
        match domain {
            Domain::Source => self.source,
            Domain::Target => self.target,
        }
    }

    /// Variables a match binds: every origin node and the destination context.
    fn wanted(&self) -> Vec<(&'a str, Domain)> {
        let origin = self.direction.origin();
        let mut out = Vec::new();
        for domain in [Domain::Source, Domain::Target] {
            for n in &self.rule.pattern(domain).nodes {
                if domain == origin || !n.create {
                    out.push((n.var.as_str(), domain));
                }
            }
        }
        out
    }

    /// Edges that must already hold for a match.
    fn checked_edges(&self) -> impl Iterator<Item = (&'a PatternEdge, Domain)> + '_ {
        let origin = self.direction.origin();
        [Domain::Source, Domain::Target]
            .into_iter()
            .flat_map(move |domain| {
                let pat = self.rule.pattern(domain);
                pat.edges
                    .iter()
                    .filter(move |e| {
                        domain == origin || (!pat.is_create(&e.from) && !pat.is_create(&e.to))
                    })
                    .map(move |e| (e, domain))
            })
    }

    fn ctx_corr(&self) -> impl Iterator<Item = &'a CorrNode> {
        self.rule.corr.iter().filter(|c| !c.create)
    }

    /// All matches, sorted by the uids of the origin create nodes.
    pub fn find_all(&self) -> Vec<Binding> {
        let mut out = Vec::new();
        self.search(&mut Binding::new(), &mut out);
        let origin = self.direction.origin();
        let creates = self.rule.pattern(origin).create_vars();
        out.sort_by_cached_key(|b| {
            let subject: Vec<String> = creates.iter().map(|v| b[*v].clone()).collect();
            (subject, b.clone())
        });
        out.dedup();
        out
    }

    fn search(&self, b: &mut Binding, out: &mut Vec<Binding>) {
        let wanted = self.wanted();
        let unbound: Vec<(&str, Domain)> = wanted
            .iter()
            .copied()
            .filter(|(v, _)| !b.contains_key(*v))
            .collect();
        if unbound.is_empty() {
            if self.complete_ok(b) {
                out.push(b.clone());
            }
            return;
        }

        // 1. extend through a correspondence link
        for c in self.ctx_corr() {
            for known in [Domain::Source, Domain::Target] {
                let side = c.side(known);
                if !side.iter().all(|v| b.contains_key(v)) {
                    continue;
                }
                let other = if known == Domain::Source {
                    Domain::Target
                } else {
                    Domain::Source
                };
                if c.side(other).iter().all(|v| b.contains_key(v)) {
                    continue;
                }
                let uids: Vec<String> = side.iter().map(|v| b[v].clone()).collect();
                let Some(link) = self
                    .corr
                    .find(&c.corr_type, known, &uids)
                    .and_then(|id| self.corr.get(id))
                else {
                    return;
                };
                let images = link.side(other);
                if images.len() != c.side(other).len() {
                    return;
                }
                let pairs: Vec<(&str, &str, Domain)> = c
                    .side(other)
                    .iter()
                    .zip(images)
                    .map(|(v, u)| (v.as_str(), u.as_str(), other))
                    .collect();
                self.try_assign(b, &pairs, out);
                return;
            }
        }

        // 2. follow an edge from a bound node
        let unbound_set: BTreeSet<&str> = unbound.iter().map(|(v, _)| *v).collect();
        for (e, domain) in self.checked_edges() {
            let model = self.model(domain);
            if b.contains_key(&e.from) && unbound_set.contains(e.to.as_str()) {
                let cands: Vec<String> = model.slot(&b[&e.from], &e.reference).to_vec();
                for u in cands {
                    self.try_assign(b, &[(&e.to, &u, domain)], out);
                }
                return;
            }
            if b.contains_key(&e.to) && unbound_set.contains(e.from.as_str()) {
                let to = &b[&e.to];
                let contain = model
                    .metamodel()
                    .reference(
                        &self.rule.pattern(domain).node(&e.from).unwrap().type_name,
                        &e.reference,
                    )
                    .is_some_and(|r| r.containment);
                let cands: Vec<String> = if contain {
                    model
                        .parent(to)
                        .filter(|(_, r)| *r == e.reference)
                        .map(|(p, _)| p.to_string())
                        .into_iter()
                        .collect()
                } else {
                    model
                        .referrers(to)
                        .filter(|(_, r)| *r == e.reference)
                        .map(|(p, _)| p.to_string())
                        .collect()
                };
                for u in cands {
                    self.try_assign(b, &[(&e.from, &u, domain)], out);
                }
                return;
            }
        }

        // 3. scan an origin node by type, create nodes first
        let origin = self.direction.origin();
        let pat = self.rule.pattern(origin);
        let pick = unbound
            .iter()
            .filter(|(_, d)| *d == origin)
            .min_by_key(|(v, _)| !pat.is_create(v));
        if let Some((v, _)) = pick {
            let ty = &pat.node(v).unwrap().type_name;
            let model = self.model(origin);
            let cands: Vec<String> = model.elements_of_type(ty).map(|e| e.uid.clone()).collect();
            for u in cands {
                self.try_assign(b, &[(v, &u, origin)], out);
            }
        }
    }

    fn try_assign(&self, b: &mut Binding, pairs: &[(&str, &str, Domain)], out: &mut Vec<Binding>) {
        let mut added = Vec::new();
        let mut ok = true;
        for (v, u, domain) in pairs {
            match b.get(*v) {
                Some(existing) if existing == u => continue,
                Some(_) => {
                    ok = false;
                    break;
                }
                None => {}
            }
            if !self.node_ok(b, v, u, *domain) {
                ok = false;
                break;
            }
            b.insert(v.to_string(), u.to_string());
            added.push(*v);
        }
        if ok && added.iter().all(|v| self.edges_ok_for(b, v)) {
            self.search(b, out);
        }
        for v in added {
            b.remove(v);
        }
    }

    /// Type conformance and injectivity within the domain.
    fn node_ok(&self, b: &Binding, var: &str, uid: &str, domain: Domain) -> bool {
        let pat = self.rule.pattern(domain);
        let Some(node) = pat.node(var) else {
            return false;
        };
        if !self.model(domain).is_instance(uid, &node.type_name) {
            return false;
        }
        !pat.nodes
            .iter()
            .any(|n| n.var != var && b.get(&n.var).is_some_and(|x| x == uid))
    }

    fn edges_ok_for(&self, b: &Binding, var: &str) -> bool {
        self.checked_edges()
            .filter(|(e, _)| e.from == var || e.to == var)
            .all(|(e, domain)| match (b.get(&e.from), b.get(&e.to)) {
                (Some(f), Some(t)) => self.model(domain).slot(f, &e.reference).contains(t),
                _ => true,
            })
    }

    fn complete_ok(&self, b: &Binding) -> bool {
        self.corr_ok(b)
            && self
                .rule
                .constraints
                .iter()
                .all(|c| self.constraint_ok(b, c))
    }

    fn corr_ok(&self, b: &Binding) -> bool {
        self.ctx_corr().all(|c| {
            let src: Vec<String> = c.source.iter().map(|v| b[v].clone()).collect();
            let tgt: Vec<String> = c.target.iter().map(|v| b[v].clone()).collect();
            self.corr
                .find(&c.corr_type, Domain::Source, &src)
                .and_then(|id| self.corr.get(id))
                .is_some_and(|l| {
                    let mut have = l.target_uids.clone();
                    let mut want = tgt.clone();
                    have.sort();
                    want.sort();
                    have == want
                })
        })
    }

    fn constraint_ok(&self, b: &Binding, c: &Constraint) -> bool {
        let lhs = self.attr_value(b, &c.var, &c.attr);
        let rhs = match &c.rhs {
            Operand::Literal(v) => Some(v.clone()),
            Operand::Attr { var, attr } => self.attr_value(b, var, attr),
        };
        lhs.is_some() && lhs == rhs
    }

    /// Full re-check of a stored match: every bound node exists with a
    /// conforming type and every required edge, link and constraint holds.
    pub fn still_holds(&self, b: &Binding) -> bool {
        for (v, domain) in self.wanted() {
            match b.get(v) {
                Some(u) if self.node_ok(b, v, u, domain) => {}
                _ => return false,
            }
        }
        self.checked_edges()
            .all(|(e, domain)| match (b.get(&e.from), b.get(&e.to)) {
                (Some(f), Some(t)) => self.model(domain).slot(f, &e.reference).contains(t),
                _ => false,
            })
            && self.complete_ok(b)
    }

    pub fn attr_value(&self, b: &Binding, var: &str, attr: &str) -> Option<Value> {
        let uid = b.get(var)?;
        if attr == "uid" {
            return Some(Value::text(uid.clone()));
        }
        let domain = self.rule.domain_of(var)?;
        self.model(domain).attr(uid, attr).cloned()
    }

    /// Evaluates a derivation. `None` when an operand is unset.
    pub fn eval(&self, b: &Binding, e: &Expr) -> Option<Value> {
        match e {
            Expr::Literal(v) => Some(v.clone()),
            Expr::Attr { var, attr } => self.attr_value(b, var, attr),
            Expr::Concat(parts) => {
                let mut s = String::new();
                for p in parts {
                    s.push_str(&self.eval(b, p)?.to_string());
                }
                Some(Value::Text(s))
            }
        }
    }
}
