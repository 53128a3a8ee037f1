use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::kernel::{ChangeKind, ChangeNotification, ListenerId, Model, Value};
use crate::metamodels::LifecycleState;

use super::container::{canonical_order, Container, EffectorCommand, EventKind, SystemEvent};
use super::source_build::{
    add_call, add_instance, add_module, add_module_type, add_wiring, source_model_of,
};
use super::PlatformError;

/// Commands executed together, in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandBatch {
    pub batch_id: u64,
    pub commands: Vec<EffectorCommand>,
    /// First and last sequence number of the notifications translated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<(u64, u64)>,
}

impl CommandBatch {
    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }
}

/// The causal connection between a container and a source model: sensor
/// events become source-model mutations, source-model changes become
/// effector commands. The adapter owns the container; the source model is
/// passed in so that it can live inside a synchronization engine.
#[derive(Debug, Clone)]
pub struct Adapter {
    container: Container,
    effector: ListenerId,
    next_batch: u64,
}

impl Adapter {
    /// Loads the container's current state into the empty `source` model and
    /// starts listening for changes to turn into commands.
    pub fn attach(mut container: Container, source: &mut Model) -> Result<Self, PlatformError> {
        let effector = source.subscribe();
        source.set_muted(effector, true);
        let snapshot = source_model_of(&container)?;
        let result = source.patch_from(&snapshot);
        source.set_muted(effector, false);
        result?;
        container.drain_events();
        Ok(Adapter {
            container,
            effector,
            next_batch: 1,
        })
    }

    pub fn container(&self) -> &Container {
        &self.container
    }

    /// Stimulus access: installing module types, injecting calls,
    /// administering commands outside the model.
    pub fn container_mut(&mut self) -> &mut Container {
        &mut self.container
    }

    pub fn pending_commands(&self, source: &Model) -> usize {
        source.pending(self.effector).len()
    }

    /// Applies every queued non-echo sensor event to `source` as a minimal
    /// mutation. Returns how many were applied.
    pub fn pump_events(&mut self, source: &mut Model) -> Result<usize, PlatformError> {
        let events = self.container.drain_events();
        source.set_muted(self.effector, true);
        let mut applied = 0;
        let mut result = Ok(());
        for (i, ev) in events.iter().enumerate() {
            if ev.echo_of.is_some() {
                continue;
            }
            if let Err(e) = self.apply_event(source, ev) {
                self.container.requeue_events(events[i..].to_vec());
                result = Err(e);
                break;
            }
            applied += 1;
        }
        source.set_muted(self.effector, false);
        result.map(|_| applied)
    }

    fn apply_event(&self, source: &mut Model, ev: &SystemEvent) -> Result<(), PlatformError> {
        let c = &self.container;
        let need = |source: &Model, uid: &str| {
            if source.contains(uid) {
                Ok(())
            } else {
                Err(PlatformError::UnknownEntity(uid.to_string()))
            }
        };
        match &ev.kind {
            EventKind::ModuleTypeInstalled { module_type } => {
                let t = c
                    .template(module_type)
                    .ok_or_else(|| PlatformError::UnknownEntity(module_type.clone()))?;
                add_module_type(source, &c.name, t)?;
            }
            EventKind::ModuleInstantiated { module, .. } => {
                let m = c
                    .module(module)
                    .ok_or_else(|| PlatformError::UnknownEntity(module.clone()))?;
                need(source, &m.module_type)?;
                let mut fresh = m.clone();
                for b in &mut fresh.beans {
                    b.instances.clear();
                }
                add_module(source, c, &fresh)?;
            }
            EventKind::ModuleStateChanged { module, to, .. } => {
                need(source, module)?;
                source.set_attribute(module, "state", to.value())?;
            }
            EventKind::EntryValueChanged { entry, value } => {
                need(source, entry)?;
                source.set_attribute(entry, "value", Value::text(value))?;
            }
            EventKind::Wired {
                connector,
                reference,
                interface,
            } => {
                need(source, reference)?;
                need(source, interface)?;
                add_wiring(
                    source,
                    &c.name,
                    &super::container::Wiring {
                        connector: connector.clone(),
                        reference: reference.clone(),
                        interface: interface.clone(),
                    },
                )?;
            }
            EventKind::Unwired { connector } => {
                need(source, connector)?;
                source.delete_element(connector)?;
            }
            EventKind::InstancesSpawned { bean, instances } => {
                need(source, bean)?;
                for uid in instances {
                    add_instance(
                        source,
                        bean,
                        &super::container::Instance {
                            uid: uid.clone(),
                            calls: Vec::new(),
                        },
                    )?;
                }
            }
            EventKind::CallCompleted {
                instance,
                call,
                interface,
                exception,
                ..
            } => {
                need(source, instance)?;
                need(source, interface)?;
                add_call(
                    source,
                    instance,
                    &super::container::CallRecord {
                        uid: call.clone(),
                        interface: interface.clone(),
                        exception: exception.clone(),
                    },
                )?;
            }
            EventKind::ModuleRemoved { module } => {
                need(source, module)?;
                source.delete_element(module)?;
            }
            EventKind::ModuleTypeRemoved { module_type } => {
                need(source, module_type)?;
                source.delete_element(module_type)?;
            }
        }
        Ok(())
    }

    /// Turns the queued source-model changes into effector commands, orders
    /// them canonically and runs them on the container, all or none. On error
    /// the changes stay queued and the container is untouched.
    pub fn flush_commands(&mut self, source: &mut Model) -> Result<CommandBatch, PlatformError> {
        let notes = source.drain_notifications(self.effector);
        if notes.is_empty() {
            return Ok(CommandBatch::default());
        }
        let range = (notes[0].sequence_no, notes[notes.len() - 1].sequence_no);
        let commands = match translate(&notes, source) {
            Ok(c) => c,
            Err(e) => {
                source.requeue(self.effector, notes);
                return Err(e);
            }
        };
        let batch_id = self.next_batch;
        if let Err(e) = self.container.execute_batch(&commands, batch_id) {
            source.requeue(self.effector, notes);
            return Err(e);
        }
        self.next_batch += 1;
        Ok(CommandBatch {
            batch_id,
            commands,
            derived_from: Some(range),
        })
    }

    /// Drops the queued source-model changes without executing them.
    pub fn dismiss_pending(&mut self, source: &mut Model) -> usize {
        source.drain_notifications(self.effector).len()
    }

    /// Brings `source` back in line with the container after a dismissal.
    /// The repairs are not turned into commands.
    pub fn reconcile(&mut self, source: &mut Model) -> Result<usize, PlatformError> {
        let snapshot = source_model_of(&self.container)?;
        source.set_muted(self.effector, true);
        let result = source.patch_from(&snapshot);
        source.set_muted(self.effector, false);
        Ok(result?)
    }

    /// True when `source` is the from-scratch image of the container.
    pub fn in_sync(&self, source: &Model) -> Result<bool, PlatformError> {
        Ok(source_model_of(&self.container)?.same_graph(source))
    }
}

/// Maps source-model changes to commands, one per relevant notification,
/// in canonical order. Reads final model state for payloads.
pub fn translate(
    notes: &[ChangeNotification],
    source: &Model,
) -> Result<Vec<EffectorCommand>, PlatformError> {
    let created: BTreeSet<&str> = notes
        .iter()
        .filter(|n| n.kind == ChangeKind::ElementCreated)
        .map(|n| n.subject_uid.as_str())
        .collect();
    let deleted: BTreeSet<&str> = notes
        .iter()
        .filter(|n| n.kind == ChangeKind::ElementDeleted)
        .map(|n| n.subject_uid.as_str())
        .collect();
    let unsupported = |n: &ChangeNotification| {
        Err(PlatformError::UnsupportedChange(format!(
            "{:?} of {}{}",
            n.kind,
            n.subject_uid,
            n.feature
                .as_deref()
                .map(|f| format!(".{f}"))
                .unwrap_or_default()
        )))
    };
    let single = |uid: &str, r: &str| {
        source
            .slot(uid, r)
            .first()
            .cloned()
            .ok_or_else(|| PlatformError::UnsupportedChange(format!("{uid}.{r} is unset")))
    };
    let mut out = Vec::new();
    for n in notes {
        let subject = n.subject_uid.as_str();
        match n.kind {
            ChangeKind::ElementCreated => {
                if n.parent.as_deref().is_some_and(|p| created.contains(p))
                    || !source.contains(subject)
                {
                    continue;
                }
                match n.type_name.as_deref() {
                    Some("EjbModule") => out.push(EffectorCommand::InstantiateModule {
                        module: subject.to_string(),
                        module_type: single(subject, "type")?,
                    }),
                    Some("EjbConnector") => out.push(EffectorCommand::Wire {
                        connector: subject.to_string(),
                        reference: single(subject, "reference")?,
                        interface: single(subject, "interface")?,
                    }),
                    _ => return unsupported(n),
                }
            }
            ChangeKind::ElementDeleted => {
                if n.parent.as_deref().is_some_and(|p| deleted.contains(p))
                    || created.contains(subject)
                {
                    continue;
                }
                match n.type_name.as_deref() {
                    Some("EjbModule") => out.push(EffectorCommand::RemoveModule {
                        module: subject.to_string(),
                    }),
                    Some("EjbModuleType") => out.push(EffectorCommand::RemoveModuleType {
                        module_type: subject.to_string(),
                    }),
                    Some("EjbConnector") => out.push(EffectorCommand::Unwire {
                        connector: subject.to_string(),
                    }),
                    _ => return unsupported(n),
                }
            }
            ChangeKind::AttributeSet => {
                // initial values belong to the creation
                if n.old_value.is_none() || deleted.contains(subject) {
                    continue;
                }
                let ty = source.get(subject).map(|e| e.type_name.as_str());
                match (ty, n.feature.as_deref()) {
                    (Some("EjbModule"), Some("state")) => {
                        let state =
                            |v: &Option<Value>| v.as_ref().and_then(LifecycleState::from_value);
                        let (Some(from), Some(to)) = (state(&n.old_value), state(&n.new_value))
                        else {
                            return unsupported(n);
                        };
                        if let Some(c) = state_command(subject, from, to) {
                            out.push(c);
                        }
                    }
                    (Some("SimpleEnvironmentEntry"), Some("value")) => {
                        out.push(EffectorCommand::SetEntry {
                            entry: subject.to_string(),
                            value: n
                                .new_value
                                .as_ref()
                                .map(|v| v.to_string())
                                .unwrap_or_default(),
                        })
                    }
                    (_, Some("name")) if n.old_value == n.new_value => {}
                    _ => return unsupported(n),
                }
            }
            ChangeKind::ReferenceAdded | ChangeKind::ReferenceRemoved => {
                let far = n.referenced_uid().unwrap_or_default();
                let touched = |u: &str| created.contains(u) || deleted.contains(u);
                if touched(subject) || touched(far) {
                    continue;
                }
                return unsupported(n);
            }
        }
    }
    canonical_order(&mut out);
    Ok(out)
}

/// The command a module state change asks for. Skipping a state yields the
/// command of the target state, which the container then refuses.
fn state_command(
    module: &str,
    from: LifecycleState,
    to: LifecycleState,
) -> Option<EffectorCommand> {
    use LifecycleState::*;
    let module = module.to_string();
    match (from, to) {
        _ if from == to => None,
        (Undeployed, Deployed) => Some(EffectorCommand::Deploy { module }),
        (Started, Deployed) => Some(EffectorCommand::Stop { module }),
        (_, Started) => Some(EffectorCommand::Start { module }),
        (_, Undeployed) => Some(EffectorCommand::Undeploy { module }),
        _ => None,
    }
}
