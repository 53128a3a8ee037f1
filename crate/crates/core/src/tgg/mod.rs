//! Incremental bidirectional synchronization of two models through triple
//! rules and an explicit correspondence model.

mod corr;
mod engine;
mod matcher;
mod rule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corr::{Binding, CorrespondenceLink, CorrespondenceModel, LinkId};
pub use engine::SyncEngine;
pub(crate) use rule::validate_rule_set;
pub use rule::{
    Aggregation, Constraint, CorrNode, Derivation, Direction, Domain, DomainPattern, Expr, Operand,
    PatternEdge, PatternNode, TripleRule,
};

use crate::kernel::KernelError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyncError {
    #[error("malformed rule {rule}: {reason}")]
    MalformedRule { rule: String, reason: String },
    #[error("rule {rule} conflicts over {uid}")]
    RuleConflict { rule: String, uid: String },
    #[error("cannot synchronize change of {uid}: {reason}")]
    UnsynchronizableChange { uid: String, reason: String },
    #[error("{0:?} side must be empty before a batch transformation")]
    NotEmpty(Domain),
    #[error("rules cannot be replaced while changes are pending")]
    PendingChanges,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFiring {
    pub rule: String,
    pub subject_uids: Vec<String>,
}

/// What one synchronization did to the destination model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncReport {
    pub direction: Direction,
    pub rules_fired: Vec<RuleFiring>,
    pub created: Vec<String>,
    pub deleted: Vec<String>,
    pub updated: Vec<String>,
}

impl SyncReport {
    pub fn new(direction: Direction) -> Self {
        SyncReport {
            direction,
            rules_fired: Vec::new(),
            created: Vec::new(),
            deleted: Vec::new(),
            updated: Vec::new(),
        }
    }

    pub fn is_noop(&self) -> bool {
        self.rules_fired.is_empty()
            && self.created.is_empty()
            && self.deleted.is_empty()
            && self.updated.is_empty()
    }
}
