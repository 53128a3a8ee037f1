//! Simulated EJB-style container with sensors and effectors, and the
//! adapter that keeps a source model causally connected to it.

mod adapter;
mod container;
pub mod naming;
mod source_build;

use thiserror::Error;

pub use adapter::{translate, Adapter, CommandBatch};
pub use container::{
    canonical_order, Bean, BeanKind, BeanTemplate, CallOutcome, CallRecord, Container,
    EffectorCommand, EntryDecl, EntryValue, EventKind, Instance, Module, ModuleTemplate,
    SystemEvent, Wiring,
};
pub use source_build::source_model_of;

use crate::kernel::KernelError;
use crate::metamodels::LifecycleState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlatformError {
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("entity {0} already exists")]
    DuplicateEntity(String),
    #[error("module {module} cannot move from {from} to {to}")]
    IllegalTransition {
        module: String,
        from: LifecycleState,
        to: LifecycleState,
    },
    #[error("module {module} cannot start: reference {reference} is unwired")]
    UnwiredStart { module: String, reference: String },
    #[error("module {0} is not started")]
    NotStarted(String),
    #[error("reference {0} is already wired")]
    AlreadyWired(String),
    #[error("reference {reference} does not accept interface {interface}")]
    IncompatibleWiring {
        reference: String,
        interface: String,
    },
    #[error("module {0} is still deployed")]
    StillDeployed(String),
    #[error("module {0} is still wired")]
    StillWired(String),
    #[error("module type {0} still has modules")]
    TypeInUse(String),
    #[error("invalid module type: {0}")]
    InvalidTemplate(String),
    #[error("no effector for change: {0}")]
    UnsupportedChange(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
