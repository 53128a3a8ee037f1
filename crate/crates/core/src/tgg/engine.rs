use std::collections::{BTreeMap, BTreeSet};

use crate::kernel::{ListenerId, Model, Placement, Value};

use super::corr::{Binding, CorrespondenceLink, CorrespondenceModel, LinkId};
use super::matcher::Matcher;
use super::rule::{validate_rule_set, Direction, Domain, TripleRule};
use super::{RuleFiring, SyncError, SyncReport};

/// Owns a source model, a target model and their correspondence model, and
/// keeps them consistent under an ordered rule set.
///
/// Rules apply in list order; matches of one rule in ascending order of the
/// uids they create from. On error the models may be partially synchronized;
/// callers that need atomicity clone the engine beforehand.
#[derive(Debug, Clone)]
pub struct SyncEngine {
    rules: Vec<TripleRule>,
    source: Model,
    target: Model,
    corr: CorrespondenceModel,
    source_listener: ListenerId,
    target_listener: ListenerId,
}

impl SyncEngine {
    pub fn new(
        rules: Vec<TripleRule>,
        mut source: Model,
        mut target: Model,
    ) -> Result<Self, SyncError> {
        validate_rule_set(&rules, source.metamodel(), target.metamodel())?;
        let source_listener = source.subscribe();
        let target_listener = target.subscribe();
        Ok(SyncEngine {
            rules,
            source,
            target,
            corr: CorrespondenceModel::new(),
            source_listener,
            target_listener,
        })
    }

    pub fn register_rules(&mut self, rules: Vec<TripleRule>) -> Result<(), SyncError> {
        if self.pending(Direction::Forward) + self.pending(Direction::Backward) > 0 {
            return Err(SyncError::PendingChanges);
        }
        validate_rule_set(&rules, self.source.metamodel(), self.target.metamodel())?;
        self.rules = rules;
        Ok(())
    }

    pub fn rules(&self) -> &[TripleRule] {
        &self.rules
    }

    pub fn source(&self) -> &Model {
        &self.source
    }

    pub fn target(&self) -> &Model {
        &self.target
    }

    pub fn corr(&self) -> &CorrespondenceModel {
        &self.corr
    }

    /// Changes made through this handle are queued for forward sync.
    pub fn source_mut(&mut self) -> &mut Model {
        &mut self.source
    }

    /// Changes made through this handle are queued for backward sync.
    pub fn target_mut(&mut self) -> &mut Model {
        &mut self.target
    }

    pub fn model(&self, domain: Domain) -> &Model {
        match domain {
            Domain::Source => &self.source,
            Domain::Target => &self.target,
        }
    }

    fn model_mut(&mut self, domain: Domain) -> &mut Model {
        match domain {
            Domain::Source => &mut self.source,
            Domain::Target => &mut self.target,
        }
    }

    fn listener(&self, domain: Domain) -> ListenerId {
        match domain {
            Domain::Source => self.source_listener,
            Domain::Target => self.target_listener,
        }
    }

    /// Number of changes queued for propagation in `direction`.
    pub fn pending(&self, direction: Direction) -> usize {
        let origin = direction.origin();
        self.model(origin).pending(self.listener(origin)).len()
    }

    fn matcher<'a>(&'a self, rule: &'a TripleRule, direction: Direction) -> Matcher<'a> {
        Matcher {
            rule,
            direction,
            source: &self.source,
            target: &self.target,
            corr: &self.corr,
        }
    }

    /// Builds the complete image of the origin model. The destination model
    /// and the correspondence model must be empty.
    pub fn transform_batch(&mut self, direction: Direction) -> Result<SyncReport, SyncError> {
        let dest = direction.destination();
        if !self.model(dest).is_empty() {
            return Err(SyncError::NotEmpty(dest));
        }
        if !self.corr.is_empty() {
            return Err(SyncError::NotEmpty(dest));
        }
        let origin = direction.origin();
        let (ol, dl) = (self.listener(origin), self.listener(dest));
        self.model_mut(origin).drain_notifications(ol);
        self.model_mut(dest).drain_notifications(dl);
        self.with_dest_muted(direction, |e, report| {
            e.create_fixpoint(direction, report)?;
            if direction == Direction::Forward {
                e.recompute_aggregates(report)?;
            }
            Ok(())
        })
    }

    /// Propagates the queued origin changes of `direction`. An empty queue is
    /// a no-op.
    pub fn synchronize(&mut self, direction: Direction) -> Result<SyncReport, SyncError> {
        let origin = direction.origin();
        let ol = self.listener(origin);
        let notes = self.model_mut(origin).drain_notifications(ol);
        if notes.is_empty() {
            return Ok(SyncReport::new(direction));
        }
        let mut dirty = BTreeSet::new();
        let mut written = BTreeSet::new();
        let mut created = Vec::new();
        for n in &notes {
            if n.kind == crate::kernel::ChangeKind::AttributeSet {
                written.extend(n.feature.clone().map(|f| (n.subject_uid.clone(), f)));
            }
            dirty.insert(n.subject_uid.clone());
            dirty.extend(n.referenced_uid().map(str::to_string));
            dirty.extend(n.parent.clone());
            if n.kind == crate::kernel::ChangeKind::ElementCreated {
                created.push(n.subject_uid.clone());
            }
        }
        self.with_dest_muted(direction, |e, report| {
            e.repair_deletions(direction, report)?;
            e.rederive(direction, &dirty, &written, report)?;
            e.create_fixpoint(direction, report)?;
            if direction == Direction::Forward {
                e.recompute_aggregates(report)?;
            } else {
                e.check_backward_coverage(&created)?;
            }
            Ok(())
        })
    }

    fn with_dest_muted(
        &mut self,
        direction: Direction,
        f: impl FnOnce(&mut Self, &mut SyncReport) -> Result<(), SyncError>,
    ) -> Result<SyncReport, SyncError> {
        let dest = direction.destination();
        let dl = self.listener(dest);
        self.model_mut(dest).set_muted(dl, true);
        let mut report = SyncReport::new(direction);
        let result = f(self, &mut report);
        self.model_mut(dest).set_muted(dl, false);
        result.map(|_| report)
    }

    fn rule_index(&self, name: &str) -> usize {
        self.rules
            .iter()
            .position(|r| r.name == name)
            .unwrap_or(usize::MAX)
    }

    fn images_exist(&self, link: &CorrespondenceLink, domain: Domain) -> bool {
        link.side(domain)
            .iter()
            .all(|u| self.model(domain).contains(u))
    }

    /// Retires links whose origin match broke and deletes their images.
    fn repair_deletions(
        &mut self,
        direction: Direction,
        report: &mut SyncReport,
    ) -> Result<(), SyncError> {
        let dest = direction.destination();
        let mut deferred = BTreeSet::new();
        loop {
            let mut ids = self.corr.ids();
            ids.sort_by_key(|id| (self.rule_index(&self.corr.get(*id).unwrap().rule), *id));
            let mut changed = false;
            for id in ids {
                if deferred.contains(&id) {
                    continue;
                }
                let Some(link) = self.corr.get(id) else {
                    continue;
                };
                let rule = &self.rules[self.rule_index(&link.rule)];
                let origin_holds = if rule.aggregate.is_some() {
                    if direction == Direction::Forward {
                        continue;
                    }
                    self.images_exist(link, direction.origin())
                } else {
                    self.matcher(rule, direction).still_holds(&link.binding)
                };
                if origin_holds {
                    if self.images_exist(link, dest) {
                        continue;
                    }
                    if !rule.creates(direction) {
                        let missing = link
                            .side(dest)
                            .iter()
                            .find(|u| !self.model(dest).contains(u))
                            .unwrap();
                        return Err(SyncError::UnsynchronizableChange {
                            uid: missing.clone(),
                            reason: format!("rule {} cannot recreate it", rule.name),
                        });
                    }
                    self.corr.remove(id);
                    changed = true;
                    continue;
                }
                if direction == Direction::Backward && !rule.propagates_backward() {
                    deferred.insert(id);
                    continue;
                }
                let images: Vec<String> = link.side(dest).to_vec();
                self.corr.remove(id);
                for u in images {
                    if self.model(dest).contains(&u) {
                        let doomed = self.model_mut(dest).delete_element(&u)?;
                        report.deleted.extend(doomed);
                    }
                }
                changed = true;
            }
            if !changed {
                break;
            }
        }
        for id in deferred {
            let Some(link) = self.corr.get(id) else {
                continue;
            };
            if let Some(u) = link
                .side(dest)
                .iter()
                .find(|u| self.model(dest).contains(u))
            {
                return Err(SyncError::UnsynchronizableChange {
                    uid: u.clone(),
                    reason: format!("rule {} does not propagate backward", link.rule),
                });
            }
            self.corr.remove(id);
        }
        Ok(())
    }

    /// Re-evaluates the derivations of every link whose match touches a
    /// changed element. Only differing values are written.
    fn rederive(
        &mut self,
        direction: Direction,
        dirty: &BTreeSet<String>,
        written: &BTreeSet<(String, String)>,
        report: &mut SyncReport,
    ) -> Result<(), SyncError> {
        let dest = direction.destination();
        let mut writes = Vec::new();
        for (_, link) in self.corr.links() {
            // aggregate links may outlive their images until recomputed
            if !link.binding.values().any(|u| dirty.contains(u)) || !self.images_exist(link, dest) {
                continue;
            }
            let rule = &self.rules[self.rule_index(&link.rule)];
            let m = self.matcher(rule, direction);
            for d in rule.derivations_for(direction).filter(|d| d.attr != "uid") {
                if rule
                    .aggregate
                    .as_ref()
                    .is_some_and(|a| a.count_var == d.var && a.count_attr == d.attr)
                {
                    continue;
                }
                let Some(uid) = link.binding.get(&d.var) else {
                    continue;
                };
                let Some(v) = m.eval(&link.binding, &d.expr) else {
                    continue;
                };
                // equal values are rewritten only when an input was written
                let rewritten = d.expr.vars().iter().any(|(var, attr)| {
                    link.binding
                        .get(*var)
                        .is_some_and(|u| written.contains(&(u.clone(), attr.to_string())))
                });
                if rewritten || self.model(dest).attr(uid, &d.attr) != Some(&v) {
                    writes.push((uid.clone(), d.attr.clone(), v));
                }
            }
        }
        for (uid, attr, v) in writes {
            self.model_mut(dest).set_attribute(&uid, &attr, v)?;
            if !report.updated.contains(&uid) {
                report.updated.push(uid);
            }
        }
        Ok(())
    }

    fn create_fixpoint(
        &mut self,
        direction: Direction,
        report: &mut SyncReport,
    ) -> Result<(), SyncError> {
        let origin = direction.origin();
        loop {
            let mut progress = false;
            for ri in 0..self.rules.len() {
                let rule = &self.rules[ri];
                if rule.aggregate.is_some() || !rule.creates(direction) {
                    continue;
                }
                let matches = self.matcher(rule, direction).find_all();
                for b in matches {
                    let rule = &self.rules[ri];
                    let subject: Vec<String> = rule
                        .corr_create()
                        .side(origin)
                        .iter()
                        .map(|v| b[v].clone())
                        .collect();
                    if self.corr.find(rule.corr_type(), origin, &subject).is_some() {
                        continue;
                    }
                    for u in &subject {
                        if let Some(other) = self.corr.links_of(origin, u).find_map(|id| {
                            let l = self.corr.get(id).unwrap();
                            (l.rule != rule.name).then(|| l.rule.clone())
                        }) {
                            return Err(SyncError::RuleConflict {
                                rule: other,
                                uid: u.clone(),
                            });
                        }
                    }
                    self.apply(ri, direction, b, None, report)?;
                    progress = true;
                }
            }
            if !progress {
                return Ok(());
            }
        }
    }

    /// Creates the destination nodes and edges of a match and records the link.
    fn apply(
        &mut self,
        ri: usize,
        direction: Direction,
        mut b: Binding,
        group: Option<Vec<String>>,
        report: &mut SyncReport,
    ) -> Result<LinkId, SyncError> {
        let rule = self.rules[ri].clone();
        let dest = direction.destination();
        let pat = rule.pattern(dest);
        let mm = self.model(dest).metamodel().clone();
        let containment_of = |var: &str| {
            pat.edges.iter().find(|e| {
                e.to == var
                    && mm
                        .reference(&pat.node(&e.from).unwrap().type_name, &e.reference)
                        .is_some_and(|r| r.containment)
            })
        };

        let mut todo: Vec<&str> = pat.create_vars();
        let mut created = Vec::new();
        while !todo.is_empty() {
            let pos = todo
                .iter()
                .position(|v| containment_of(v).is_none_or(|e| b.contains_key(&e.from)))
                .ok_or_else(|| SyncError::MalformedRule {
                    rule: rule.name.clone(),
                    reason: "cyclic containment among created nodes".into(),
                })?;
            let var = todo.remove(pos);
            let node = pat.node(var).unwrap();
            let m = self.matcher(&rule, direction);
            let mut uid = None;
            let mut attrs = Vec::new();
            for d in rule.derivations_for(direction).filter(|d| d.var == var) {
                match (d.attr.as_str(), m.eval(&b, &d.expr)) {
                    ("uid", Some(v)) => uid = Some(v.to_string()),
                    (_, Some(v)) => attrs.push((d.attr.clone(), v)),
                    _ => {}
                }
            }
            let uid = match uid {
                Some(u) => u,
                None => self.model_mut(dest).fresh_uid(&node.type_name),
            };
            if self.model(dest).contains(&uid) {
                return Err(SyncError::RuleConflict {
                    rule: rule.name.clone(),
                    uid,
                });
            }
            let placement = match containment_of(var) {
                Some(e) => Placement::child(b[&e.from].clone(), e.reference.clone()),
                None => Placement::Root,
            };
            self.model_mut(dest)
                .create_element(&node.type_name, Some(&uid), attrs, placement)?;
            b.insert(var.to_string(), uid.clone());
            created.push(uid);
        }
        for e in &pat.edges {
            if !(pat.is_create(&e.from) || pat.is_create(&e.to))
                || containment_of(&e.to).is_some_and(|c| c == e)
            {
                continue;
            }
            let (from, to) = (b[&e.from].clone(), b[&e.to].clone());
            self.model_mut(dest)
                .add_reference(&from, &e.reference, &to)?;
        }

        let cc = rule.corr_create();
        let link = CorrespondenceLink {
            corr_type: cc.corr_type.clone(),
            rule: rule.name.clone(),
            source_uids: cc.source.iter().map(|v| b[v].clone()).collect(),
            target_uids: cc.target.iter().map(|v| b[v].clone()).collect(),
            binding: b,
            group,
        };
        report.rules_fired.push(RuleFiring {
            rule: rule.name.clone(),
            subject_uids: link.side(direction.origin()).to_vec(),
        });
        report.created.extend(created);
        Ok(self.corr.insert(link))
    }

    /// Recomputes every aggregating rule from the current source model:
    /// one image per (destination context, key value) with the group size
    /// as its count.
    fn recompute_aggregates(&mut self, report: &mut SyncReport) -> Result<(), SyncError> {
        for ri in 0..self.rules.len() {
            let rule = self.rules[ri].clone();
            let Some(agg) = rule.aggregate.clone() else {
                continue;
            };
            let m = self.matcher(&rule, Direction::Forward);
            let mut groups: BTreeMap<Vec<String>, Vec<Binding>> = BTreeMap::new();
            for b in m.find_all() {
                let mut key: Vec<String> = rule
                    .target
                    .nodes
                    .iter()
                    .filter(|n| !n.create)
                    .map(|n| b[&n.var].clone())
                    .collect();
                key.push(
                    m.attr_value(&b, &agg.key_var, &agg.key_attr)
                        .map(|v| v.to_string())
                        .unwrap_or_default(),
                );
                groups.entry(key).or_default().push(b);
            }
            let mut existing: BTreeMap<Vec<String>, LinkId> = BTreeMap::new();
            for (id, l) in self.corr.links() {
                if l.rule == rule.name {
                    existing.insert(l.group.clone().unwrap_or_default(), id);
                }
            }
            for (key, id) in &existing {
                let link = self.corr.get(*id).unwrap();
                if groups.contains_key(key) && self.images_exist(link, Domain::Target) {
                    continue;
                }
                let images = link.target_uids.clone();
                self.corr.remove(*id);
                for u in images {
                    if self.target.contains(&u) {
                        report.deleted.extend(self.target.delete_element(&u)?);
                    }
                }
            }
            for (key, members) in groups {
                let mut sources: Vec<String> = members
                    .iter()
                    .flat_map(|b| rule.corr_create().source.iter().map(|v| b[v].clone()))
                    .collect();
                sources.sort();
                sources.dedup();
                let first = members[0].clone();
                let found = self
                    .corr
                    .links()
                    .find(|(_, l)| l.rule == rule.name && l.group.as_ref() == Some(&key))
                    .map(|(id, _)| id);
                let id = match found {
                    Some(id) => id,
                    None => self.apply(
                        ri,
                        Direction::Forward,
                        first.clone(),
                        Some(key.clone()),
                        report,
                    )?,
                };
                let link = self.corr.get(id).unwrap();
                let count_uid = link.binding[&agg.count_var].clone();
                let mut binding = link.binding.clone();
                binding.insert(agg.key_var.clone(), first[&agg.key_var].clone());
                if link.source_uids != sources {
                    let targets = link.target_uids.clone();
                    self.corr.update(id, sources, targets, binding);
                }
                let count = Value::Int(members.len() as i64);
                if self.target.attr(&count_uid, &agg.count_attr) != Some(&count) {
                    self.target
                        .set_attribute(&count_uid, &agg.count_attr, count)?;
                    if !report.updated.contains(&count_uid) && !report.created.contains(&count_uid)
                    {
                        report.updated.push(count_uid);
                    }
                }
            }
        }
        Ok(())
    }

    /// Every destination-side creation must have been absorbed by a rule.
    fn check_backward_coverage(&self, created: &[String]) -> Result<(), SyncError> {
        for uid in created {
            if self.target.contains(uid) && !self.corr.covers(Domain::Target, uid) {
                return Err(SyncError::UnsynchronizableChange {
                    uid: uid.clone(),
                    reason: "no rule maps this element back to the source".into(),
                });
            }
        }
        Ok(())
    }
}
