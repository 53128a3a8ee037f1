//! Runtime models for a simulated component platform: a platform-specific
//! source model kept causally connected to the running system, an abstract
//! component model synchronized from it by declarative triple rules, and an
//! adaptation layer that lets managers change the system through the
//! abstract model only.

pub mod adaptation;
pub mod dsl;
pub mod kernel;
pub mod manager;
pub mod metamodels;
pub mod platform;
pub mod sweep;
pub mod tgg;
