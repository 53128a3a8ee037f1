use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::metamodel::Metamodel;
use super::notify::{ChangeKind, ChangeNotification, Listener, ListenerId};
use super::value::Value;
use super::KernelError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelElement {
    pub uid: String,
    pub type_name: String,
    pub attribute_values: BTreeMap<String, Value>,
    /// Containment and cross-reference slots, both as ordered uid lists.
    pub reference_slots: BTreeMap<String, Vec<String>>,
}

impl ModelElement {
    pub fn attr(&self, name: &str) -> Option<&Value> {
        self.attribute_values.get(name)
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.attr(name).and_then(Value::as_text)
    }

    pub fn slot(&self, reference: &str) -> &[String] {
        self.reference_slots
            .get(reference)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Where a new element is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    Root,
    Child { parent: String, reference: String },
}

impl Placement {
    pub fn child(parent: impl Into<String>, reference: impl Into<String>) -> Self {
        Placement::Child {
            parent: parent.into(),
            reference: reference.into(),
        }
    }
}

/// A cardinality bound violated at a quiescent point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardinalityViolation {
    pub uid: String,
    pub reference: String,
    pub count: usize,
}

/// A typed attributed graph instance of one metamodel.
///
/// The element index holds exactly the elements reachable from the roots by
/// containment. Every mutation is reported to the attached listeners, each
/// of which keeps its own queue until drained.
#[derive(Debug, Clone)]
pub struct Model {
    metamodel: Arc<Metamodel>,
    roots: Vec<String>,
    index: BTreeMap<String, ModelElement>,
    parents: BTreeMap<String, (String, String)>,
    /// target uid -> (referrer uid, reference name), cross references only
    incoming: BTreeMap<String, BTreeSet<(String, String)>>,
    next_seq: u64,
    uid_counters: BTreeMap<char, u64>,
    listeners: Vec<Listener>,
}

impl Model {
    pub fn new(metamodel: Arc<Metamodel>) -> Self {
        Model {
            metamodel,
            roots: Vec::new(),
            index: BTreeMap::new(),
            parents: BTreeMap::new(),
            incoming: BTreeMap::new(),
            next_seq: 1,
            uid_counters: BTreeMap::new(),
            listeners: Vec::new(),
        }
    }

    pub fn metamodel(&self) -> &Arc<Metamodel> {
        &self.metamodel
    }

    // ---- listeners -------------------------------------------------------

    pub fn subscribe(&mut self) -> ListenerId {
        self.listeners.push(Listener {
            attached: true,
            ..Listener::default()
        });
        ListenerId(self.listeners.len() - 1)
    }

    pub fn unsubscribe(&mut self, id: ListenerId) {
        if let Some(l) = self.listeners.get_mut(id.0) {
            *l = Listener::default();
        }
    }

    /// A muted listener does not receive notifications until unmuted.
    pub fn set_muted(&mut self, id: ListenerId, muted: bool) {
        if let Some(l) = self.listeners.get_mut(id.0) {
            l.muted = muted;
        }
    }

    /// Returns the queued notifications in sequence order and clears the queue.
    pub fn drain_notifications(&mut self, id: ListenerId) -> Vec<ChangeNotification> {
        self.listeners
            .get_mut(id.0)
            .map(|l| std::mem::take(&mut l.queue))
            .unwrap_or_default()
    }

    pub fn pending(&self, id: ListenerId) -> &[ChangeNotification] {
        self.listeners
            .get(id.0)
            .map(|l| l.queue.as_slice())
            .unwrap_or(&[])
    }

    /// Puts notifications back in front of a listener's queue.
    pub fn requeue(&mut self, id: ListenerId, mut notes: Vec<ChangeNotification>) {
        if let Some(l) = self.listeners.get_mut(id.0) {
            notes.append(&mut l.queue);
            l.queue = notes;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(
        &mut self,
        kind: ChangeKind,
        subject: &str,
        feature: Option<&str>,
        old_value: Option<Value>,
        new_value: Option<Value>,
        type_name: Option<&str>,
        parent: Option<&str>,
    ) {
        let note = ChangeNotification {
            sequence_no: self.next_seq,
            kind,
            subject_uid: subject.to_string(),
            feature: feature.map(str::to_string),
            old_value,
            new_value,
            type_name: type_name.map(str::to_string),
            parent: parent.map(str::to_string),
        };
        self.next_seq += 1;
        for l in self.listeners.iter_mut().filter(|l| l.attached && !l.muted) {
            l.queue.push(note.clone());
        }
    }

    // ---- queries ---------------------------------------------------------

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn roots(&self) -> &[String] {
        &self.roots
    }

    pub fn get(&self, uid: &str) -> Option<&ModelElement> {
        self.index.get(uid)
    }

    pub fn contains(&self, uid: &str) -> bool {
        self.index.contains_key(uid)
    }

    pub fn elements(&self) -> impl Iterator<Item = &ModelElement> {
        self.index.values()
    }

    /// Elements whose type is `type_name` or one of its subtypes, by uid.
    pub fn elements_of_type<'a>(
        &'a self,
        type_name: &'a str,
    ) -> impl Iterator<Item = &'a ModelElement> + 'a {
        self.index
            .values()
            .filter(move |e| self.metamodel.is_subtype(&e.type_name, type_name))
    }

    pub fn is_instance(&self, uid: &str, type_name: &str) -> bool {
        self.index
            .get(uid)
            .is_some_and(|e| self.metamodel.is_subtype(&e.type_name, type_name))
    }

    pub fn attr(&self, uid: &str, name: &str) -> Option<&Value> {
        self.index.get(uid).and_then(|e| e.attr(name))
    }

    pub fn text(&self, uid: &str, name: &str) -> Option<&str> {
        self.attr(uid, name).and_then(Value::as_text)
    }

    pub fn slot(&self, uid: &str, reference: &str) -> &[String] {
        self.index
            .get(uid)
            .map(|e| e.slot(reference))
            .unwrap_or(&[])
    }

    /// Containment owner and slot name.
    pub fn parent(&self, uid: &str) -> Option<(&str, &str)> {
        self.parents.get(uid).map(|(p, r)| (p.as_str(), r.as_str()))
    }

    /// Elements holding a cross reference to `uid`, with the reference name.
    pub fn referrers(&self, uid: &str) -> impl Iterator<Item = (&str, &str)> {
        self.incoming
            .get(uid)
            .into_iter()
            .flat_map(|s| s.iter().map(|(a, b)| (a.as_str(), b.as_str())))
    }

    /// Elements in `uid`'s containment subtree, parents before children.
    pub fn subtree(&self, uid: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![uid.to_string()];
        while let Some(u) = stack.pop() {
            if let Some(e) = self.index.get(&u) {
                for r in self.metamodel.all_references(&e.type_name) {
                    if r.containment {
                        for c in e.slot(&r.name).iter().rev() {
                            stack.push(c.clone());
                        }
                    }
                }
                out.push(u);
            }
        }
        out
    }

    /// Content equality: same metamodel, roots, and elements. Listener state and
    /// sequence counters are ignored.
    pub fn same_content(&self, other: &Model) -> bool {
        self.metamodel.name == other.metamodel.name
            && self.roots == other.roots
            && self.index == other.index
    }

    // ---- mutation --------------------------------------------------------

    /// Keeps generated uids clear of caller-supplied ones of the same shape,
    /// so a uid is never handed out twice even after deletion.
    fn note_uid(&mut self, uid: &str) {
        let mut chars = uid.chars();
        let (Some(initial), digits) = (chars.next(), chars.as_str()) else {
            return;
        };
        if let Ok(n) = digits.parse::<u64>() {
            let counter = self.uid_counters.entry(initial).or_insert(0);
            *counter = (*counter).max(n);
        }
    }

    /// Generates a fresh uid of the form `<type-initial><counter>`. Uids
    /// once used in this model are never generated again.
    pub fn fresh_uid(&mut self, type_name: &str) -> String {
        let initial = type_name
            .chars()
            .next()
            .map(|c| c.to_ascii_lowercase())
            .unwrap_or('e');
        let counter = self.uid_counters.entry(initial).or_insert(0);
        loop {
            *counter += 1;
            let candidate = format!("{initial}{counter}");
            if !self.index.contains_key(&candidate) {
                return candidate;
            }
        }
    }

    pub fn create_element<I, K>(
        &mut self,
        type_name: &str,
        uid: Option<&str>,
        attrs: I,
        placement: Placement,
    ) -> Result<String, KernelError>
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        let mm = Arc::clone(&self.metamodel);
        let nt = mm
            .node_type(type_name)
            .ok_or_else(|| KernelError::UnknownType(type_name.to_string()))?;
        if nt.is_abstract {
            return Err(KernelError::AbstractTypeInstantiation(
                type_name.to_string(),
            ));
        }
        let attrs: Vec<(String, Value)> = attrs.into_iter().map(|(k, v)| (k.into(), v)).collect();
        for (name, value) in &attrs {
            self.check_attr(type_name, name, value)?;
        }
        if let Placement::Child { parent, reference } = &placement {
            let owner = self
                .index
                .get(parent)
                .ok_or_else(|| KernelError::UnknownUid(parent.clone()))?;
            let spec = mm.reference(&owner.type_name, reference).ok_or_else(|| {
                KernelError::UnknownReference {
                    type_name: owner.type_name.clone(),
                    reference: reference.clone(),
                }
            })?;
            if !spec.containment {
                return Err(KernelError::NotContainment(reference.clone()));
            }
            if !mm.is_subtype(type_name, &spec.target) {
                return Err(KernelError::ReferenceTargetMismatch {
                    reference: reference.clone(),
                    expected: spec.target.clone(),
                    found: type_name.to_string(),
                });
            }
        }
        let uid = match uid {
            Some(u) => {
                if self.index.contains_key(u) {
                    return Err(KernelError::DuplicateUid(u.to_string()));
                }
                self.note_uid(u);
                u.to_string()
            }
            None => self.fresh_uid(type_name),
        };

        self.index.insert(
            uid.clone(),
            ModelElement {
                uid: uid.clone(),
                type_name: type_name.to_string(),
                attribute_values: BTreeMap::new(),
                reference_slots: BTreeMap::new(),
            },
        );
        let (parent, feature) = match &placement {
            Placement::Root => {
                self.roots.push(uid.clone());
                (None, None)
            }
            Placement::Child { parent, reference } => {
                self.index
                    .get_mut(parent)
                    .expect("checked above")
                    .reference_slots
                    .entry(reference.clone())
                    .or_default()
                    .push(uid.clone());
                self.parents
                    .insert(uid.clone(), (parent.clone(), reference.clone()));
                (Some(parent.as_str()), Some(reference.as_str()))
            }
        };
        self.emit(
            ChangeKind::ElementCreated,
            &uid,
            feature,
            None,
            None,
            Some(type_name),
            parent,
        );
        for (name, value) in attrs {
            self.store_attr(&uid, &name, value);
        }
        Ok(uid)
    }

    fn check_attr(&self, type_name: &str, name: &str, value: &Value) -> Result<(), KernelError> {
        let spec = self.metamodel.attribute(type_name, name).ok_or_else(|| {
            KernelError::UnknownAttribute {
                type_name: type_name.to_string(),
                attribute: name.to_string(),
            }
        })?;
        if !spec.kind.accepts(value) {
            return Err(KernelError::AttributeKindMismatch {
                type_name: type_name.to_string(),
                attribute: name.to_string(),
                value: value.clone(),
            });
        }
        Ok(())
    }

    fn store_attr(&mut self, uid: &str, name: &str, value: Value) {
        let elem = self.index.get_mut(uid).expect("caller checked uid");
        let old = elem
            .attribute_values
            .insert(name.to_string(), value.clone());
        self.emit(
            ChangeKind::AttributeSet,
            uid,
            Some(name),
            old,
            Some(value),
            None,
            None,
        );
    }

    /// Stores `value`. Identity writes are reported like any other write.
    pub fn set_attribute(
        &mut self,
        uid: &str,
        name: &str,
        value: Value,
    ) -> Result<(), KernelError> {
        let type_name = self
            .index
            .get(uid)
            .ok_or_else(|| KernelError::UnknownUid(uid.to_string()))?
            .type_name
            .clone();
        self.check_attr(&type_name, name, &value)?;
        self.store_attr(uid, name, value);
        Ok(())
    }

    /// Appends `target` to a cross-reference slot.
    pub fn add_reference(
        &mut self,
        uid: &str,
        reference: &str,
        target: &str,
    ) -> Result<(), KernelError> {
        let spec = self.cross_reference_spec(uid, reference)?;
        let target_type = &self
            .index
            .get(target)
            .ok_or_else(|| KernelError::UnknownUid(target.to_string()))?
            .type_name;
        if !self.metamodel.is_subtype(target_type, &spec.target) {
            return Err(KernelError::ReferenceTargetMismatch {
                reference: reference.to_string(),
                expected: spec.target.clone(),
                found: target_type.clone(),
            });
        }
        let slot = self
            .index
            .get_mut(uid)
            .expect("checked")
            .reference_slots
            .entry(reference.to_string())
            .or_default();
        if slot.iter().any(|t| t == target) {
            return Err(KernelError::DuplicateReference {
                uid: uid.to_string(),
                reference: reference.to_string(),
                target: target.to_string(),
            });
        }
        slot.push(target.to_string());
        self.incoming
            .entry(target.to_string())
            .or_default()
            .insert((uid.to_string(), reference.to_string()));
        self.emit(
            ChangeKind::ReferenceAdded,
            uid,
            Some(reference),
            None,
            Some(Value::text(target)),
            None,
            None,
        );
        Ok(())
    }

    pub fn remove_reference(
        &mut self,
        uid: &str,
        reference: &str,
        target: &str,
    ) -> Result<(), KernelError> {
        self.cross_reference_spec(uid, reference)?;
        let slots = &mut self.index.get_mut(uid).expect("checked").reference_slots;
        let pos = slots
            .get(reference)
            .and_then(|slot| slot.iter().position(|t| t == target));
        let Some(pos) = pos else {
            return Err(KernelError::MissingReference {
                uid: uid.to_string(),
                reference: reference.to_string(),
                target: target.to_string(),
            });
        };
        let slot = slots.get_mut(reference).expect("found above");
        slot.remove(pos);
        if slot.is_empty() {
            slots.remove(reference);
        }
        self.drop_incoming(target, uid, reference);
        self.emit(
            ChangeKind::ReferenceRemoved,
            uid,
            Some(reference),
            Some(Value::text(target)),
            None,
            None,
            None,
        );
        Ok(())
    }

    fn cross_reference_spec(
        &self,
        uid: &str,
        reference: &str,
    ) -> Result<super::ReferenceSpec, KernelError> {
        let elem = self
            .index
            .get(uid)
            .ok_or_else(|| KernelError::UnknownUid(uid.to_string()))?;
        let spec = self
            .metamodel
            .reference(&elem.type_name, reference)
            .ok_or_else(|| KernelError::UnknownReference {
                type_name: elem.type_name.clone(),
                reference: reference.to_string(),
            })?;
        if spec.containment {
            return Err(KernelError::ContainmentReference(reference.to_string()));
        }
        Ok(spec.clone())
    }

    fn drop_incoming(&mut self, target: &str, referrer: &str, reference: &str) {
        if let Some(set) = self.incoming.get_mut(target) {
            set.remove(&(referrer.to_string(), reference.to_string()));
            if set.is_empty() {
                self.incoming.remove(target);
            }
        }
    }

    /// Deletes `uid` with its containment subtree. Cross references from
    /// outside the subtree are cleared first, then elements are removed
    /// children before parents.
    pub fn delete_element(&mut self, uid: &str) -> Result<Vec<String>, KernelError> {
        if !self.index.contains_key(uid) {
            return Err(KernelError::UnknownUid(uid.to_string()));
        }
        let doomed = self.subtree(uid);
        let doomed_set: BTreeSet<&str> = doomed.iter().map(String::as_str).collect();

        let mut dangling: Vec<(String, String, String)> = Vec::new();
        for d in &doomed {
            for (referrer, reference) in self.referrers(d) {
                if !doomed_set.contains(referrer) {
                    dangling.push((referrer.to_string(), reference.to_string(), d.clone()));
                }
            }
        }
        dangling.sort();
        for (referrer, reference, target) in dangling {
            self.remove_reference(&referrer, &reference, &target)?;
        }

        for d in doomed.iter().rev() {
            self.remove_leaf(d);
        }
        Ok(doomed)
    }

    /// Removes one element whose children are already gone.
    fn remove_leaf(&mut self, uid: &str) {
        let Some(elem) = self.index.remove(uid) else {
            return;
        };
        let mm = Arc::clone(&self.metamodel);
        for r in mm.all_references(&elem.type_name) {
            if !r.containment {
                for t in elem.slot(&r.name) {
                    self.drop_incoming(t, uid, &r.name);
                }
            }
        }
        // whatever still points at it from inside the deleted subtree is gone too
        self.incoming.remove(uid);
        let (parent, feature) = match self.parents.remove(uid) {
            Some((p, r)) => {
                if let Some(owner) = self.index.get_mut(&p) {
                    if let Some(slot) = owner.reference_slots.get_mut(&r) {
                        slot.retain(|c| c != uid);
                        if slot.is_empty() {
                            owner.reference_slots.remove(&r);
                        }
                    }
                }
                (Some(p), Some(r))
            }
            None => {
                self.roots.retain(|r| r != uid);
                (None, None)
            }
        };
        self.emit(
            ChangeKind::ElementDeleted,
            uid,
            feature.as_deref(),
            None,
            None,
            Some(&elem.type_name),
            parent.as_deref(),
        );
    }

    /// Applies a notification without re-validating it and without emitting
    /// anything. Used to replay an event log onto an earlier copy.
    pub fn apply_notification(&mut self, n: &ChangeNotification) -> Result<(), KernelError> {
        let saved: Vec<bool> = self.listeners.iter().map(|l| l.muted).collect();
        for l in &mut self.listeners {
            l.muted = true;
        }
        let result = self.apply_inner(n);
        for (l, m) in self.listeners.iter_mut().zip(saved) {
            l.muted = m;
        }
        result
    }

    fn apply_inner(&mut self, n: &ChangeNotification) -> Result<(), KernelError> {
        let malformed = || KernelError::MalformedNotification(n.sequence_no);
        match n.kind {
            ChangeKind::ElementCreated => {
                let ty = n.type_name.as_deref().ok_or_else(malformed)?;
                let placement = match (&n.parent, &n.feature) {
                    (Some(p), Some(f)) => Placement::child(p.clone(), f.clone()),
                    (None, None) => Placement::Root,
                    _ => return Err(malformed()),
                };
                self.create_element(
                    ty,
                    Some(&n.subject_uid),
                    Vec::<(String, Value)>::new(),
                    placement,
                )?;
            }
            ChangeKind::ElementDeleted => {
                if self.subtree(&n.subject_uid).len() != 1 {
                    return Err(malformed());
                }
                self.delete_element(&n.subject_uid)?;
            }
            ChangeKind::AttributeSet => {
                let f = n.feature.as_deref().ok_or_else(malformed)?;
                let v = n.new_value.clone().ok_or_else(malformed)?;
                self.set_attribute(&n.subject_uid, f, v)?;
            }
            ChangeKind::ReferenceAdded | ChangeKind::ReferenceRemoved => {
                let f = n.feature.as_deref().ok_or_else(malformed)?;
                let t = n.referenced_uid().ok_or_else(malformed)?.to_string();
                if n.kind == ChangeKind::ReferenceAdded {
                    self.add_reference(&n.subject_uid, f, &t)?;
                } else {
                    self.remove_reference(&n.subject_uid, f, &t)?;
                }
            }
        }
        Ok(())
    }

    /// Mutates this model until it has the content of `desired`, up to the
    /// order of slot entries. Every step is an ordinary notifying mutation.
    /// Returns the number of mutations.
    pub fn patch_from(&mut self, desired: &Model) -> Result<usize, KernelError> {
        let mut steps = 0;
        let misplaced = |this: &Model, uid: &str| {
            let mine = this.index.get(uid);
            let theirs = desired.index.get(uid);
            match (mine, theirs) {
                (Some(a), Some(b)) => {
                    a.type_name != b.type_name || this.parent(uid) != desired.parent(uid)
                }
                _ => true,
            }
        };
        let doomed: Vec<String> = self
            .index
            .keys()
            .filter(|u| misplaced(self, u))
            .filter(|u| self.parent(u).is_none_or(|(p, _)| !misplaced(self, p)))
            .cloned()
            .collect();
        for u in doomed {
            if self.contains(&u) {
                self.delete_element(&u)?;
                steps += 1;
            }
        }
        for root in desired.roots() {
            for uid in desired.subtree(root) {
                if self.contains(&uid) {
                    continue;
                }
                let e = &desired.index[&uid];
                let placement = match desired.parent(&uid) {
                    Some((p, r)) => Placement::child(p, r),
                    None => Placement::Root,
                };
                self.create_element(
                    &e.type_name,
                    Some(&uid),
                    e.attribute_values.clone(),
                    placement,
                )?;
                steps += 1;
            }
        }
        let mm = Arc::clone(&self.metamodel);
        for e in desired.index.values() {
            for (name, v) in &e.attribute_values {
                if self.attr(&e.uid, name) != Some(v) {
                    self.set_attribute(&e.uid, name, v.clone())?;
                    steps += 1;
                }
            }
            for r in mm
                .all_references(&e.type_name)
                .into_iter()
                .filter(|r| !r.containment)
            {
                let want = e.slot(&r.name).to_vec();
                let have = self.slot(&e.uid, &r.name).to_vec();
                for t in have.iter().filter(|t| !want.contains(t)) {
                    self.remove_reference(&e.uid, &r.name, t)?;
                    steps += 1;
                }
                for t in want.iter().filter(|t| !have.contains(t)) {
                    self.add_reference(&e.uid, &r.name, t)?;
                    steps += 1;
                }
            }
        }
        Ok(steps)
    }

    /// Content equality up to the order of roots and slot entries: the
    /// uid-preserving isomorphism test.
    pub fn same_graph(&self, other: &Model) -> bool {
        type Canon<'m> = Vec<(
            &'m str,
            &'m str,
            &'m BTreeMap<String, Value>,
            BTreeMap<&'m str, BTreeSet<&'m str>>,
        )>;
        fn canon(m: &Model) -> Canon<'_> {
            m.index
                .values()
                .map(|e| {
                    let slots = e
                        .reference_slots
                        .iter()
                        .map(|(k, v)| (k.as_str(), v.iter().map(String::as_str).collect()))
                        .collect();
                    (
                        e.uid.as_str(),
                        e.type_name.as_str(),
                        &e.attribute_values,
                        slots,
                    )
                })
                .collect()
        }
        self.metamodel.name == other.metamodel.name && canon(self) == canon(other)
    }

    /// Human-readable differences to `other`, at most `limit` lines.
    pub fn diff(&self, other: &Model, limit: usize) -> Vec<String> {
        let mut out = Vec::new();
        for (u, e) in &self.index {
            match other.index.get(u) {
                None => out.push(format!("only left: {u} ({})", e.type_name)),
                Some(o)
                    if o.type_name != e.type_name || o.attribute_values != e.attribute_values =>
                {
                    out.push(format!(
                        "differs: {u}: {:?} vs {:?}",
                        e.attribute_values, o.attribute_values
                    ))
                }
                Some(o) => {
                    for (r, v) in &e.reference_slots {
                        let a: BTreeSet<_> = v.iter().collect();
                        let b: BTreeSet<_> = o.slot(r).iter().collect();
                        if a != b {
                            out.push(format!("slot {u}.{r}: {a:?} vs {b:?}"));
                        }
                    }
                    for r in o
                        .reference_slots
                        .keys()
                        .filter(|r| !e.reference_slots.contains_key(*r))
                    {
                        out.push(format!("slot {u}.{r} only right"));
                    }
                }
            }
        }
        for (u, e) in &other.index {
            if !self.index.contains_key(u) {
                out.push(format!("only right: {u} ({})", e.type_name));
            }
        }
        out.truncate(limit);
        out
    }

    // ---- quiescent checks ------------------------------------------------

    /// Reference slots whose size is outside the declared bounds.
    pub fn cardinality_violations(&self) -> Vec<CardinalityViolation> {
        let mut out = Vec::new();
        for e in self.index.values() {
            for r in self.metamodel.all_references(&e.type_name) {
                let n = e.slot(&r.name).len();
                let too_many = r.upper.is_some_and(|u| n > u as usize);
                if n < r.lower as usize || too_many {
                    out.push(CardinalityViolation {
                        uid: e.uid.clone(),
                        reference: r.name.clone(),
                        count: n,
                    });
                }
            }
        }
        out
    }

    /// Checks the structural invariants: the containment relation is a forest
    /// over the index, the index equals the reachable set, and the incoming
    /// reference index agrees with the slots.
    pub fn check_integrity(&self) -> Result<(), String> {
        let mut reached = BTreeSet::new();
        for root in &self.roots {
            if self.parents.contains_key(root) {
                return Err(format!("root {root} has a parent"));
            }
            for u in self.subtree(root) {
                if !reached.insert(u.clone()) {
                    return Err(format!("{u} reachable twice"));
                }
            }
        }
        let indexed: BTreeSet<String> = self.index.keys().cloned().collect();
        if reached != indexed {
            return Err(format!(
                "index/reachable mismatch: {:?}",
                indexed.symmetric_difference(&reached).collect::<Vec<_>>()
            ));
        }
        let mut incoming: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        for e in self.index.values() {
            for r in self.metamodel.all_references(&e.type_name) {
                for t in e.slot(&r.name) {
                    if !self.index.contains_key(t) {
                        return Err(format!("{}.{} dangles to {t}", e.uid, r.name));
                    }
                    if r.containment {
                        if self.parents.get(t) != Some(&(e.uid.clone(), r.name.clone())) {
                            return Err(format!("parent map wrong for {t}"));
                        }
                    } else {
                        incoming
                            .entry(t.clone())
                            .or_default()
                            .insert((e.uid.clone(), r.name.clone()));
                    }
                }
            }
        }
        if incoming != self.incoming {
            return Err("incoming reference index out of date".into());
        }
        Ok(())
    }
}
