//! Typed-graph metamodeling kernel: metamodels, models with uid identity and
//! containment, and queued change notifications.

mod metamodel;
mod model;
mod notify;
mod value;

pub mod json;

use thiserror::Error;

pub use metamodel::{
    AttrKind, AttributeSpec, Metamodel, MetamodelBuilder, NodeBuilder, NodeType, ReferenceSpec,
};
pub use model::{CardinalityViolation, Model, ModelElement, Placement};
pub use notify::{ChangeKind, ChangeNotification, ListenerId};
pub use value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("uid {0} already in use")]
    DuplicateUid(String),
    #[error("cannot instantiate abstract type {0}")]
    AbstractTypeInstantiation(String),
    #[error("value {value} does not fit {type_name}.{attribute}")]
    AttributeKindMismatch {
        type_name: String,
        attribute: String,
        value: Value,
    },
    #[error("{type_name} has no attribute {attribute}")]
    UnknownAttribute {
        type_name: String,
        attribute: String,
    },
    #[error("{type_name} has no reference {reference}")]
    UnknownReference {
        type_name: String,
        reference: String,
    },
    #[error("unknown uid {0}")]
    UnknownUid(String),
    #[error("unknown node type {0}")]
    UnknownType(String),
    #[error("reference {reference} expects {expected}, got {found}")]
    ReferenceTargetMismatch {
        reference: String,
        expected: String,
        found: String,
    },
    #[error("{0} is not a containment reference")]
    NotContainment(String),
    #[error("{0} is a containment reference; create the element in place instead")]
    ContainmentReference(String),
    #[error("{uid}.{reference} already holds {target}")]
    DuplicateReference {
        uid: String,
        reference: String,
        target: String,
    },
    #[error("{uid}.{reference} does not hold {target}")]
    MissingReference {
        uid: String,
        reference: String,
        target: String,
    },
    #[error("invalid metamodel: {0}")]
    InvalidMetamodel(String),
    #[error("notification {0} cannot be replayed")]
    MalformedNotification(u64),
    #[error("model json: {0}")]
    Json(String),
}

#[cfg(test)]
mod tests;
