use serde::{Deserialize, Serialize};

use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeKind {
    ElementCreated,
    ElementDeleted,
    AttributeSet,
    ReferenceAdded,
    ReferenceRemoved,
}

/// One model change. For reference changes `new_value`/`old_value` carry the
/// referenced uid; for creation and deletion `feature` names the containment
/// slot and `parent` its owner (`None` for roots).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeNotification {
    pub sequence_no: u64,
    pub kind: ChangeKind,
    pub subject_uid: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub old_value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub new_value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub type_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parent: Option<String>,
}

impl ChangeNotification {
    /// Uid on the far end of a reference change, if any.
    pub fn referenced_uid(&self) -> Option<&str> {
        match self.kind {
            ChangeKind::ReferenceAdded => self.new_value.as_ref().and_then(Value::as_text),
            ChangeKind::ReferenceRemoved => self.old_value.as_ref().and_then(Value::as_text),
            _ => None,
        }
    }
}

/// Handle for a registered notification sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ListenerId(pub(crate) usize);

#[derive(Debug, Clone, Default)]
pub(crate) struct Listener {
    pub queue: Vec<ChangeNotification>,
    pub muted: bool,
    pub attached: bool,
}
