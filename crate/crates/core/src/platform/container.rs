use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::metamodels::LifecycleState;

use super::naming;
use super::PlatformError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeanKind {
    Session,
    MessageDriven,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDecl {
    pub name: String,
    pub value_type: String,
}

/// A bean declaration. References name the business interface they need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeanTemplate {
    pub name: String,
    pub kind: BeanKind,
    #[serde(default)]
    pub interfaces: Vec<String>,
    #[serde(default)]
    pub references: Vec<String>,
    #[serde(default)]
    pub entries: Vec<EntryDecl>,
}

impl BeanTemplate {
    pub fn session(name: &str) -> Self {
        BeanTemplate {
            name: name.into(),
            kind: BeanKind::Session,
            interfaces: Vec::new(),
            references: Vec::new(),
            entries: Vec::new(),
        }
    }

    pub fn message_driven(name: &str) -> Self {
        BeanTemplate {
            kind: BeanKind::MessageDriven,
            ..Self::session(name)
        }
    }

    pub fn provides(mut self, interface: &str) -> Self {
        self.interfaces.push(interface.into());
        self
    }

    pub fn requires(mut self, interface: &str) -> Self {
        self.references.push(interface.into());
        self
    }

    pub fn entry(mut self, name: &str, value_type: &str) -> Self {
        self.entries.push(EntryDecl {
            name: name.into(),
            value_type: value_type.into(),
        });
        self
    }
}

/// An installed module type: the configuration space of its modules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleTemplate {
    pub name: String,
    pub beans: Vec<BeanTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryValue {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub uid: String,
    /// Uid of the EJB interface the call went through.
    pub interface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exception: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub uid: String,
    pub calls: Vec<CallRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bean {
    pub uid: String,
    pub name: String,
    pub entries: Vec<EntryValue>,
    pub instances: Vec<Instance>,
}

/// A deployable module; its uid is its name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Module {
    pub name: String,
    pub module_type: String,
    pub state: LifecycleState,
    pub beans: Vec<Bean>,
}

/// A reference of one module bound to an interface of another.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wiring {
    pub connector: String,
    pub reference: String,
    pub interface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum EventKind {
    ModuleTypeInstalled {
        module_type: String,
    },
    ModuleInstantiated {
        module: String,
        module_type: String,
    },
    ModuleStateChanged {
        module: String,
        from: LifecycleState,
        to: LifecycleState,
    },
    EntryValueChanged {
        entry: String,
        value: String,
    },
    Wired {
        connector: String,
        reference: String,
        interface: String,
    },
    Unwired {
        connector: String,
    },
    /// A bean's instance pool came up on its module's first start.
    InstancesSpawned {
        bean: String,
        instances: Vec<String>,
    },
    CallCompleted {
        module: String,
        instance: String,
        call: String,
        interface: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exception: Option<String>,
    },
    ModuleRemoved {
        module: String,
    },
    ModuleTypeRemoved {
        module_type: String,
    },
}

/// A sensor event. `echo_of` carries the id of the command batch that
/// caused it; such events are already reflected in the source model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemEvent {
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo_of: Option<u64>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command")]
pub enum EffectorCommand {
    Stop {
        module: String,
    },
    Unwire {
        connector: String,
    },
    Undeploy {
        module: String,
    },
    RemoveModule {
        module: String,
    },
    RemoveModuleType {
        module_type: String,
    },
    InstantiateModule {
        module: String,
        module_type: String,
    },
    Deploy {
        module: String,
    },
    Wire {
        connector: String,
        reference: String,
        interface: String,
    },
    SetEntry {
        entry: String,
        value: String,
    },
    Start {
        module: String,
    },
}

impl EffectorCommand {
    /// Position of the command's class in the canonical order.
    pub fn class_rank(&self) -> u8 {
        match self {
            Self::Stop { .. } => 0,
            Self::Unwire { .. } => 1,
            Self::Undeploy { .. } => 2,
            Self::RemoveModule { .. } => 3,
            Self::RemoveModuleType { .. } => 4,
            Self::InstantiateModule { .. } => 5,
            Self::Deploy { .. } => 6,
            Self::Wire { .. } => 7,
            Self::SetEntry { .. } => 8,
            Self::Start { .. } => 9,
        }
    }

    /// The uid the command acts on.
    pub fn subject(&self) -> &str {
        match self {
            Self::Stop { module }
            | Self::Undeploy { module }
            | Self::RemoveModule { module }
            | Self::InstantiateModule { module, .. }
            | Self::Deploy { module }
            | Self::Start { module } => module,
            Self::Unwire { connector } | Self::Wire { connector, .. } => connector,
            Self::RemoveModuleType { module_type } => module_type,
            Self::SetEntry { entry, .. } => entry,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Stop { .. } => "Stop",
            Self::Unwire { .. } => "Unwire",
            Self::Undeploy { .. } => "Undeploy",
            Self::RemoveModule { .. } => "RemoveModule",
            Self::RemoveModuleType { .. } => "RemoveModuleType",
            Self::InstantiateModule { .. } => "InstantiateModule",
            Self::Deploy { .. } => "Deploy",
            Self::Wire { .. } => "Wire",
            Self::SetEntry { .. } => "SetEntry",
            Self::Start { .. } => "Start",
        }
    }
}

/// Stable sort into the canonical order: stops, unwirings, undeployments,
/// removals, instantiations, deployments, wirings, entry writes, starts;
/// by subject uid within a class.
pub fn canonical_order(commands: &mut [EffectorCommand]) {
    commands.sort_by(|a, b| (a.class_rank(), a.subject()).cmp(&(b.class_rank(), b.subject())));
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallOutcome {
    Ok,
    Exception(String),
}

/// The simulated managed system. Sensors are the event queue; effectors
/// are [`EffectorCommand`]s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Container {
    pub name: String,
    templates: Vec<ModuleTemplate>,
    modules: Vec<Module>,
    wirings: Vec<Wiring>,
    pool_size: usize,
    #[serde(skip)]
    events: VecDeque<SystemEvent>,
    #[serde(skip)]
    clock: u64,
}

impl Container {
    /// `name` doubles as the container's uid.
    pub fn new(name: &str) -> Self {
        Container {
            name: name.into(),
            templates: Vec::new(),
            modules: Vec::new(),
            wirings: Vec::new(),
            pool_size: 3,
            events: VecDeque::new(),
            clock: 0,
        }
    }

    /// Number of instances each bean gets when its module first starts.
    pub fn with_pool_size(mut self, n: usize) -> Self {
        self.pool_size = n;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty() && self.modules.is_empty() && self.wirings.is_empty()
    }

    pub fn templates(&self) -> &[ModuleTemplate] {
        &self.templates
    }

    pub fn modules(&self) -> &[Module] {
        &self.modules
    }

    pub fn wirings(&self) -> &[Wiring] {
        &self.wirings
    }

    pub fn template(&self, name: &str) -> Option<&ModuleTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn wiring(&self, connector: &str) -> Option<&Wiring> {
        self.wirings.iter().find(|w| w.connector == connector)
    }

    pub fn bean_template(&self, module: &Module, bean: &Bean) -> Option<&BeanTemplate> {
        self.template(&module.module_type)?
            .beans
            .iter()
            .find(|b| b.name == bean.name)
    }

    /// Reference uids of a module with the interface name each one needs.
    pub fn references_of(&self, module: &Module) -> Vec<(String, String)> {
        module
            .beans
            .iter()
            .filter_map(|b| self.bean_template(module, b).map(|t| (b, t)))
            .flat_map(|(b, t)| {
                t.references
                    .iter()
                    .map(|r| (naming::reference(&b.uid, r), r.clone()))
            })
            .collect()
    }

    /// Interface uids of a module with their names.
    pub fn interfaces_of(&self, module: &Module) -> Vec<(String, String)> {
        module
            .beans
            .iter()
            .filter_map(|b| self.bean_template(module, b).map(|t| (b, t)))
            .filter(|(_, t)| t.kind == BeanKind::Session)
            .flat_map(|(b, t)| {
                t.interfaces
                    .iter()
                    .map(|i| (naming::interface(&b.uid, i), i.clone()))
            })
            .collect()
    }

    fn find_reference(&self, uid: &str) -> Option<(String, String)> {
        self.modules
            .iter()
            .flat_map(|m| {
                self.references_of(m)
                    .into_iter()
                    .map(|(u, n)| (u, n, m.name.clone()))
            })
            .find(|(u, _, _)| u == uid)
            .map(|(_, n, m)| (m, n))
    }

    fn find_interface(&self, uid: &str) -> Option<(String, String)> {
        self.modules
            .iter()
            .flat_map(|m| {
                self.interfaces_of(m)
                    .into_iter()
                    .map(|(u, n)| (u, n, m.name.clone()))
            })
            .find(|(u, _, _)| u == uid)
            .map(|(_, n, m)| (m, n))
    }

    /// The entry value slot behind an entry uid.
    fn find_entry_mut(&mut self, uid: &str) -> Option<&mut EntryValue> {
        self.modules
            .iter_mut()
            .flat_map(|m| m.beans.iter_mut())
            .flat_map(|b| {
                let bean = b.uid.clone();
                b.entries
                    .iter_mut()
                    .map(move |e| (naming::entry(&bean, &e.name), e))
            })
            .find(|(u, _)| u == uid)
            .map(|(_, e)| e)
    }

    fn module_mut(&mut self, name: &str) -> Result<&mut Module, PlatformError> {
        self.modules
            .iter_mut()
            .find(|m| m.name == name)
            .ok_or_else(|| PlatformError::UnknownEntity(name.to_string()))
    }

    fn emit(&mut self, kind: EventKind, echo_of: Option<u64>) {
        self.clock += 1;
        self.events.push_back(SystemEvent {
            timestamp: self.clock,
            echo_of,
            kind,
        });
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    pub fn drain_events(&mut self) -> Vec<SystemEvent> {
        self.events.drain(..).collect()
    }

    pub(crate) fn requeue_events(&mut self, events: Vec<SystemEvent>) {
        for e in events.into_iter().rev() {
            self.events.push_front(e);
        }
    }

    /// Installs a module type, as an administrator deploying a new archive.
    pub fn install_module_type(&mut self, template: ModuleTemplate) -> Result<(), PlatformError> {
        if self.template(&template.name).is_some() {
            return Err(PlatformError::DuplicateEntity(template.name));
        }
        if template.beans.is_empty() {
            return Err(PlatformError::InvalidTemplate(format!(
                "{} declares no bean",
                template.name
            )));
        }
        if let Some(b) = template
            .beans
            .iter()
            .find(|b| b.kind == BeanKind::MessageDriven && !b.interfaces.is_empty())
        {
            return Err(PlatformError::InvalidTemplate(format!(
                "message-driven bean {} cannot provide interfaces",
                b.name
            )));
        }
        let name = template.name.clone();
        self.templates.push(template);
        self.emit(EventKind::ModuleTypeInstalled { module_type: name }, None);
        Ok(())
    }

    /// Runs a command outside any adapter batch; its events reach the
    /// source model on the next pump.
    pub fn administer(&mut self, command: &EffectorCommand) -> Result<(), PlatformError> {
        self.execute(command, None)
    }

    /// Runs all commands or none. Events are tagged with `batch_id`.
    pub fn execute_batch(
        &mut self,
        commands: &[EffectorCommand],
        batch_id: u64,
    ) -> Result<(), PlatformError> {
        let mut scratch = self.clone();
        for c in commands {
            scratch.execute(c, Some(batch_id))?;
        }
        *self = scratch;
        Ok(())
    }

    fn transition(
        &mut self,
        module: &str,
        to: LifecycleState,
        echo: Option<u64>,
    ) -> Result<(), PlatformError> {
        let m = self.module_mut(module)?;
        let from = m.state;
        if !from.can_move_to(to) {
            return Err(PlatformError::IllegalTransition {
                module: module.to_string(),
                from,
                to,
            });
        }
        m.state = to;
        self.emit(
            EventKind::ModuleStateChanged {
                module: module.to_string(),
                from,
                to,
            },
            echo,
        );
        Ok(())
    }

    fn execute(
        &mut self,
        command: &EffectorCommand,
        echo: Option<u64>,
    ) -> Result<(), PlatformError> {
        use EffectorCommand::*;
        match command {
            InstantiateModule {
                module,
                module_type,
            } => {
                let template = self
                    .template(module_type)
                    .ok_or_else(|| PlatformError::UnknownEntity(module_type.clone()))?
                    .clone();
                if self.module(module).is_some() {
                    return Err(PlatformError::DuplicateEntity(module.clone()));
                }
                let beans = template
                    .beans
                    .iter()
                    .map(|bt| Bean {
                        uid: naming::bean(module, &bt.name),
                        name: bt.name.clone(),
                        entries: bt
                            .entries
                            .iter()
                            .map(|e| EntryValue {
                                name: e.name.clone(),
                                value: String::new(),
                            })
                            .collect(),
                        instances: Vec::new(),
                    })
                    .collect();
                self.modules.push(Module {
                    name: module.clone(),
                    module_type: module_type.clone(),
                    state: LifecycleState::Undeployed,
                    beans,
                });
                self.emit(
                    EventKind::ModuleInstantiated {
                        module: module.clone(),
                        module_type: module_type.clone(),
                    },
                    echo,
                );
            }
            Deploy { module } => self.transition(module, LifecycleState::Deployed, echo)?,
            Undeploy { module } => self.transition(module, LifecycleState::Undeployed, echo)?,
            Stop { module } => self.transition(module, LifecycleState::Deployed, echo)?,
            Start { module } => {
                let m = self
                    .module(module)
                    .ok_or_else(|| PlatformError::UnknownEntity(module.clone()))?;
                if m.state == LifecycleState::Deployed {
                    if let Some((r, _)) = self
                        .references_of(m)
                        .into_iter()
                        .find(|(r, _)| !self.wirings.iter().any(|w| &w.reference == r))
                    {
                        return Err(PlatformError::UnwiredStart {
                            module: module.clone(),
                            reference: r,
                        });
                    }
                }
                self.transition(module, LifecycleState::Started, echo)?;
                let pool = self.pool_size;
                let mut spawned = Vec::new();
                for b in &mut self.module_mut(module)?.beans {
                    if b.instances.is_empty() && pool > 0 {
                        b.instances = (1..=pool)
                            .map(|n| Instance {
                                uid: naming::instance(&b.uid, n),
                                calls: Vec::new(),
                            })
                            .collect();
                        spawned.push((
                            b.uid.clone(),
                            b.instances.iter().map(|i| i.uid.clone()).collect(),
                        ));
                    }
                }
                for (bean, instances) in spawned {
                    self.emit(EventKind::InstancesSpawned { bean, instances }, None);
                }
            }
            SetEntry { entry, value } => {
                let slot = self
                    .find_entry_mut(entry)
                    .ok_or_else(|| PlatformError::UnknownEntity(entry.clone()))?;
                slot.value = value.clone();
                self.emit(
                    EventKind::EntryValueChanged {
                        entry: entry.clone(),
                        value: value.clone(),
                    },
                    echo,
                );
            }
            Wire {
                connector,
                reference,
                interface,
            } => {
                let (_, needed) = self
                    .find_reference(reference)
                    .ok_or_else(|| PlatformError::UnknownEntity(reference.clone()))?;
                let (_, offered) = self
                    .find_interface(interface)
                    .ok_or_else(|| PlatformError::UnknownEntity(interface.clone()))?;
                if needed != offered {
                    return Err(PlatformError::IncompatibleWiring {
                        reference: reference.clone(),
                        interface: interface.clone(),
                    });
                }
                if self.wiring(connector).is_some() {
                    return Err(PlatformError::DuplicateEntity(connector.clone()));
                }
                if self.wirings.iter().any(|w| &w.reference == reference) {
                    return Err(PlatformError::AlreadyWired(reference.clone()));
                }
                self.wirings.push(Wiring {
                    connector: connector.clone(),
                    reference: reference.clone(),
                    interface: interface.clone(),
                });
                self.emit(
                    EventKind::Wired {
                        connector: connector.clone(),
                        reference: reference.clone(),
                        interface: interface.clone(),
                    },
                    echo,
                );
            }
            Unwire { connector } => {
                let pos = self
                    .wirings
                    .iter()
                    .position(|w| &w.connector == connector)
                    .ok_or_else(|| PlatformError::UnknownEntity(connector.clone()))?;
                self.wirings.remove(pos);
                self.emit(
                    EventKind::Unwired {
                        connector: connector.clone(),
                    },
                    echo,
                );
            }
            RemoveModule { module } => {
                let m = self
                    .module(module)
                    .ok_or_else(|| PlatformError::UnknownEntity(module.clone()))?;
                if m.state != LifecycleState::Undeployed {
                    return Err(PlatformError::StillDeployed(module.clone()));
                }
                let ends: Vec<String> = self
                    .references_of(m)
                    .into_iter()
                    .chain(self.interfaces_of(m))
                    .map(|(u, _)| u)
                    .collect();
                if self
                    .wirings
                    .iter()
                    .any(|w| ends.contains(&w.reference) || ends.contains(&w.interface))
                {
                    return Err(PlatformError::StillWired(module.clone()));
                }
                self.modules.retain(|m| &m.name != module);
                self.emit(
                    EventKind::ModuleRemoved {
                        module: module.clone(),
                    },
                    echo,
                );
            }
            RemoveModuleType { module_type } => {
                if self.template(module_type).is_none() {
                    return Err(PlatformError::UnknownEntity(module_type.clone()));
                }
                if self.modules.iter().any(|m| &m.module_type == module_type) {
                    return Err(PlatformError::TypeInUse(module_type.clone()));
                }
                self.templates.retain(|t| &t.name != module_type);
                self.emit(
                    EventKind::ModuleTypeRemoved {
                        module_type: module_type.clone(),
                    },
                    echo,
                );
            }
        }
        Ok(())
    }

    /// Runs one scripted call through the named business interface of a
    /// started module. Instances take calls in turn.
    pub fn inject_call(
        &mut self,
        module: &str,
        interface: &str,
        outcome: CallOutcome,
    ) -> Result<SystemEvent, PlatformError> {
        let m = self
            .module(module)
            .ok_or_else(|| PlatformError::UnknownEntity(module.to_string()))?;
        if m.state != LifecycleState::Started {
            return Err(PlatformError::NotStarted(module.to_string()));
        }
        let (iface_uid, bean_idx) = m
            .beans
            .iter()
            .enumerate()
            .find_map(|(i, b)| {
                let t = self.bean_template(m, b)?;
                (t.kind == BeanKind::Session && t.interfaces.iter().any(|n| n == interface))
                    .then(|| (naming::interface(&b.uid, interface), i))
            })
            .ok_or_else(|| PlatformError::UnknownEntity(format!("{module}/{interface}")))?;
        let bean = &mut self.module_mut(module)?.beans[bean_idx];
        let total: usize = bean.instances.iter().map(|i| i.calls.len()).sum();
        let n = bean.instances.len();
        if n == 0 {
            return Err(PlatformError::NotStarted(module.to_string()));
        }
        let inst = &mut bean.instances[total % n];
        let call = naming::call(&inst.uid, inst.calls.len() + 1);
        let exception = match outcome {
            CallOutcome::Ok => None,
            CallOutcome::Exception(e) => Some(e),
        };
        inst.calls.push(CallRecord {
            uid: call.clone(),
            interface: iface_uid.clone(),
            exception: exception.clone(),
        });
        let instance = inst.uid.clone();
        self.emit(
            EventKind::CallCompleted {
                module: module.to_string(),
                instance,
                call,
                interface: iface_uid,
                exception,
            },
            None,
        );
        Ok(self.events.back().cloned().expect("just emitted"))
    }

    pub fn snapshot_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("container serializes")
    }
}
