//! The self-healing manager, the web-shop fixture and scenario scripts.

pub mod fixture;
mod healing;
pub mod scenario;

use thiserror::Error;

pub use fixture::build_webshop_fixture;
pub use healing::{
    run_on, run_self_healing, Assertion, Healing, HealingPolicy, Plan, ScenarioResult,
    SelfHealingManager, Symptom, TickRecord,
};

use crate::adaptation::AdaptationError;
use crate::platform::PlatformError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManagerError {
    #[error("the container already holds entities")]
    NonEmptyContainer,
    #[error("no other component type provides the interface type of {0}")]
    NoAlternativeType(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid scenario script: {0}")]
    Script(String),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
}
