//! The platform-specific EJB-style source metamodel, the platform-independent
//! component target metamodel, and their well-formedness constraints.

mod source;
mod target;
mod wellformed;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use source::{build_source_metamodel, SOURCE_METAMODEL};
pub use target::{build_target_metamodel, TARGET_METAMODEL};
pub use wellformed::{check_wellformedness, ForeignMetamodel, Violation};

use crate::kernel::{AttrKind, Value};

/// Component and module lifecycle. Legal moves are one step along
/// UNDEPLOYED - DEPLOYED - STARTED in either direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LifecycleState {
    Undeployed,
    Deployed,
    Started,
}

impl LifecycleState {
    pub const ALL: [LifecycleState; 3] = [Self::Undeployed, Self::Deployed, Self::Started];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Undeployed => "UNDEPLOYED",
            Self::Deployed => "DEPLOYED",
            Self::Started => "STARTED",
        }
    }

    pub fn can_move_to(self, next: LifecycleState) -> bool {
        matches!(
            (self, next),
            (Self::Undeployed, Self::Deployed)
                | (Self::Deployed, Self::Undeployed)
                | (Self::Deployed, Self::Started)
                | (Self::Started, Self::Deployed)
        )
    }

    pub(crate) fn attr_kind() -> AttrKind {
        AttrKind::Enumeration(Self::ALL.iter().map(|s| s.as_str().to_string()).collect())
    }

    pub fn value(self) -> Value {
        Value::text(self.as_str())
    }

    pub fn from_value(v: &Value) -> Option<Self> {
        v.as_text().and_then(|s| s.parse().ok())
    }
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LifecycleState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown lifecycle state {s}"))
    }
}


#[cfg(test)]
mod structure_tests;
