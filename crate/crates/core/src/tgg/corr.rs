//! The correspondence model: typed links between source and target elements,
//! indexed by uid on both sides.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::rule::Domain;

pub type LinkId = u64;

/// Variable bindings of the rule match that produced a link.
pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrespondenceLink {
    pub corr_type: String,
    pub rule: String,
    /// Elements created by the rule on the source side.
    pub source_uids: Vec<String>,
    /// Elements created by the rule on the target side.
    pub target_uids: Vec<String>,
    /// The full match, context nodes included.
    pub binding: Binding,
    /// Group key of an aggregating link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Vec<String>>,
}

impl CorrespondenceLink {
    pub fn side(&self, domain: Domain) -> &[String] {
        match domain {
            Domain::Source => &self.source_uids,
            Domain::Target => &self.target_uids,
        }
    }

    /// Identity of a link irrespective of its id: what batch and incremental
    /// runs are compared by.
    pub fn signature(&self) -> (String, String, Vec<String>, Vec<String>) {
        let mut s = self.source_uids.clone();
        let mut t = self.target_uids.clone();
        s.sort();
        t.sort();
        (self.corr_type.clone(), self.rule.clone(), s, t)
    }
}

fn key(corr_type: &str, uids: &[String]) -> (String, Vec<String>) {
    let mut v = uids.to_vec();
    v.sort();
    (corr_type.to_string(), v)
}

/// Links with consistent indexes. No two links of one correspondence type
/// share a source uid set, nor a target uid set when that set is non-empty.
#[derive(Debug, Clone, Default)]
pub struct CorrespondenceModel {
    links: BTreeMap<LinkId, CorrespondenceLink>,
    next_id: LinkId,
    by_source_set: BTreeMap<(String, Vec<String>), LinkId>,
    by_target_set: BTreeMap<(String, Vec<String>), LinkId>,
    by_source_uid: BTreeMap<String, BTreeSet<LinkId>>,
    by_target_uid: BTreeMap<String, BTreeSet<LinkId>>,
}

impl CorrespondenceModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn get(&self, id: LinkId) -> Option<&CorrespondenceLink> {
        self.links.get(&id)
    }

    pub fn links(&self) -> impl Iterator<Item = (LinkId, &CorrespondenceLink)> {
        self.links.iter().map(|(id, l)| (*id, l))
    }

    pub fn ids(&self) -> Vec<LinkId> {
        self.links.keys().copied().collect()
    }

    /// The link of `corr_type` whose `domain` side is exactly `uids` (any order).
    pub fn find(&self, corr_type: &str, domain: Domain, uids: &[String]) -> Option<LinkId> {
        let k = key(corr_type, uids);
        match domain {
            Domain::Source => self.by_source_set.get(&k).copied(),
            Domain::Target => self.by_target_set.get(&k).copied(),
        }
    }

    /// Links whose `domain` side contains `uid`.
    pub fn links_of(&self, domain: Domain, uid: &str) -> impl Iterator<Item = LinkId> + '_ {
        let idx = match domain {
            Domain::Source => &self.by_source_uid,
            Domain::Target => &self.by_target_uid,
        };
        idx.get(uid).into_iter().flatten().copied()
    }

    pub fn covers(&self, domain: Domain, uid: &str) -> bool {
        self.links_of(domain, uid).next().is_some()
    }

    pub fn insert(&mut self, link: CorrespondenceLink) -> LinkId {
        let id = self.next_id;
        self.next_id += 1;
        self.index(id, &link);
        self.links.insert(id, link);
        id
    }

    pub fn remove(&mut self, id: LinkId) -> Option<CorrespondenceLink> {
        let link = self.links.remove(&id)?;
        self.unindex(id, &link);
        Some(link)
    }

    /// Replaces the uid sides of an existing link, keeping its id.
    pub fn update(
        &mut self,
        id: LinkId,
        source_uids: Vec<String>,
        target_uids: Vec<String>,
        binding: Binding,
    ) {
        if let Some(mut link) = self.links.remove(&id) {
            self.unindex(id, &link);
            link.source_uids = source_uids;
            link.target_uids = target_uids;
            link.binding = binding;
            self.index(id, &link);
            self.links.insert(id, link);
        }
    }

    fn index(&mut self, id: LinkId, link: &CorrespondenceLink) {
        self.by_source_set
            .insert(key(&link.corr_type, &link.source_uids), id);
        if !link.target_uids.is_empty() {
            self.by_target_set
                .insert(key(&link.corr_type, &link.target_uids), id);
        }
        for u in &link.source_uids {
            self.by_source_uid.entry(u.clone()).or_default().insert(id);
        }
        for u in &link.target_uids {
            self.by_target_uid.entry(u.clone()).or_default().insert(id);
        }
    }

    fn unindex(&mut self, id: LinkId, link: &CorrespondenceLink) {
        self.by_source_set
            .remove(&key(&link.corr_type, &link.source_uids));
        if !link.target_uids.is_empty() {
            self.by_target_set
                .remove(&key(&link.corr_type, &link.target_uids));
        }
        for (idx, uids) in [
            (&mut self.by_source_uid, &link.source_uids),
            (&mut self.by_target_uid, &link.target_uids),
        ] {
            for u in uids {
                if let Some(set) = idx.get_mut(u) {
                    set.remove(&id);
                    if set.is_empty() {
                        idx.remove(u);
                    }
                }
            }
        }
    }

    /// Link signatures, sorted; independent of link ids and insertion order.
    pub fn signatures(&self) -> Vec<(String, String, Vec<String>, Vec<String>)> {
        let mut v: Vec<_> = self
            .links
            .values()
            .map(CorrespondenceLink::signature)
            .collect();
        v.sort();
        v
    }

    /// Checks that the indexes agree with the link set.
    pub fn check_indexes(&self) -> Result<(), String> {
        let mut rebuilt = CorrespondenceModel::default();
        for (id, l) in &self.links {
            rebuilt.index(*id, l);
        }
        if rebuilt.by_source_set != self.by_source_set
            || rebuilt.by_target_set != self.by_target_set
            || rebuilt.by_source_uid != self.by_source_uid
            || rebuilt.by_target_uid != self.by_target_uid
        {
            return Err("correspondence indexes disagree with the link set".into());
        }
        if self.by_source_set.len() != self.links.len() {
            return Err("two links share a source uid set".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "links": self.links.values().collect::<Vec<_>>(),
        })
    }
}
