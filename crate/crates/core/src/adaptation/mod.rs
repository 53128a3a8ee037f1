//! Restricted adaptation operators on the target model, the factory that
//! refines component instantiation into source-model structure, and the
//! cross-model consistency audit.

mod audit;
mod factory;
mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{audit, AuditReport};
pub use factory::{module_name, Factory, FactoryRegistry, ModuleFactory};
pub use session::{AdaptationSession, MonitorReport, StepRecord};

use crate::kernel::{KernelError, Value};
use crate::platform::PlatformError;
use crate::tgg::SyncError;

/// Why an operator call was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// The change is outside the operator set.
    NotAnOperator,
    IllegalTransition,
    UnwiredStart,
    RoleMismatch,
    TypeMismatch,
    AlreadyWired,
    StillDeployed,
    StillWired,
    TypeInUse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{operator} refused ({kind:?}): {reason}")]
pub struct OperatorViolation {
    pub operator: String,
    pub kind: ViolationKind,
    pub reason: String,
}

/// A raw edit of the target model, as a manager might attempt it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "edit", rename_all = "snake_case")]
pub enum TargetMutation {
    CreateElement {
        type_name: String,
        parent: String,
        reference: String,
    },
    DeleteElement {
        uid: String,
    },
    SetAttribute {
        uid: String,
        attribute: String,
        value: Value,
    },
    AddReference {
        uid: String,
        reference: String,
        target: String,
    },
    RemoveReference {
        uid: String,
        reference: String,
        target: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdaptationError {
    #[error(transparent)]
    Refused(#[from] OperatorViolation),
    #[error("unknown component type {0}")]
    UnknownComponentType(String),
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("unknown property {0}")]
    UnknownProperty(String),
    #[error("unknown interface {0}")]
    UnknownInterface(String),
    #[error("unknown connector {0}")]
    UnknownConnector(String),
    #[error("factory failed for {type_uid}: {reason}")]
    FactoryFailure { type_uid: String, reason: String },
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl AdaptationError {
    pub fn violation(&self) -> Option<&OperatorViolation> {
        match self {
            AdaptationError::Refused(v) => Some(v),
            _ => None,
        }
    }
}
