use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::dsl::builtin_rules;
use crate::kernel::{Model, Placement, Value};
use crate::metamodels::{build_source_metamodel, build_target_metamodel, LifecycleState};
use crate::platform::{Adapter, CommandBatch, Container};
use crate::tgg::{Direction, Domain, SyncEngine, SyncReport};

use super::audit::{audit, AuditReport};
use super::factory::FactoryRegistry;
use super::{AdaptationError, OperatorViolation, TargetMutation, ViolationKind};

/// What one operator did on its way down to the container and back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub operator: String,
    pub args: Vec<String>,
    /// Backward propagation of the target change. Absent for factory steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward: Option<SyncReport>,
    /// Commands executed for the step; absent while deferred in batched mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<CommandBatch>,
    /// Forward propagation of the resulting sensor events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<SyncReport>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dismissed: bool,
}

/// Result of one monitoring pass: sensor events pumped into the source model
/// and their forward propagation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub events: usize,
    pub forward: SyncReport,
}

#[derive(Debug, Clone)]
struct Checkpoint {
    engine: SyncEngine,
    adapter: Adapter,
}

/// The adaptation surface a manager works through. Managers see the target
/// model and change it only through the operators here; each operator is
/// propagated to the container before it returns unless the session is
/// batched. A refused or failed operator leaves every model untouched.
#[derive(Debug)]
pub struct AdaptationSession {
    engine: SyncEngine,
    adapter: Adapter,
    factories: FactoryRegistry,
    batched: bool,
    batch_start: Option<Checkpoint>,
    log: Vec<StepRecord>,
    violations: Vec<OperatorViolation>,
    foreign_reads: Cell<u64>,
}

type Res<T> = Result<T, AdaptationError>;

impl AdaptationSession {
    /// Connects to `container`: loads its state into a source model and
    /// derives the target model from it.
    pub fn attach(container: Container) -> Res<Self> {
        let mut source = Model::new(build_source_metamodel());
        let adapter = Adapter::attach(container, &mut source)?;
        let mut engine = SyncEngine::new(
            builtin_rules(),
            source,
            Model::new(build_target_metamodel()),
        )?;
        engine.transform_batch(Direction::Forward)?;
        Ok(AdaptationSession {
            engine,
            adapter,
            factories: FactoryRegistry::standard(),
            batched: false,
            batch_start: None,
            log: Vec::new(),
            violations: Vec::new(),
            foreign_reads: Cell::new(0),
        })
    }

    /// Defers propagation of later operators to [`commit`](Self::commit).
    pub fn set_batched(&mut self, batched: bool) {
        self.batched = batched;
    }

    pub fn is_batched(&self) -> bool {
        self.batched
    }

    pub fn factories_mut(&mut self) -> &mut FactoryRegistry {
        &mut self.factories
    }

    pub fn target(&self) -> &Model {
        self.engine.target()
    }

    /// Platform-level view for monitoring infrastructure and tests.
    /// Every call is counted; see [`foreign_reads`](Self::foreign_reads).
    pub fn source(&self) -> &Model {
        self.foreign_reads.set(self.foreign_reads.get() + 1);
        self.engine.source()
    }

    /// Counted like [`source`](Self::source).
    pub fn container(&self) -> &Container {
        self.foreign_reads.set(self.foreign_reads.get() + 1);
        self.adapter.container()
    }

    /// Stimulus access to the managed system. Counted like
    /// [`source`](Self::source).
    pub fn container_mut(&mut self) -> &mut Container {
        self.foreign_reads.set(self.foreign_reads.get() + 1);
        self.adapter.container_mut()
    }

    /// Number of source-model or container accesses so far.
    pub fn foreign_reads(&self) -> u64 {
        self.foreign_reads.get()
    }

    pub fn engine(&self) -> &SyncEngine {
        self.foreign_reads.set(self.foreign_reads.get() + 1);
        &self.engine
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    pub fn violations(&self) -> &[OperatorViolation] {
        &self.violations
    }

    /// JSON dumps of the target, source, correspondence and container, in
    /// that order. Not counted as a foreign read.
    pub fn dumps(&self) -> [serde_json::Value; 4] {
        [
            crate::kernel::json::to_json(self.engine.target()),
            crate::kernel::json::to_json(self.engine.source()),
            self.engine.corr().to_json(),
            self.adapter.container().snapshot_json(),
        ]
    }

    pub fn audit(&self) -> AuditReport {
        audit(&self.engine, &self.adapter)
    }

    /// Pumps queued sensor events into the source model and propagates them
    /// forward.
    pub fn monitor(&mut self) -> Res<MonitorReport> {
        let events = self.adapter.pump_events(self.engine.source_mut())?;
        let forward = self.engine.synchronize(Direction::Forward)?;
        Ok(MonitorReport { events, forward })
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            engine: self.engine.clone(),
            adapter: self.adapter.clone(),
        }
    }

    fn restore(&mut self, c: Checkpoint) {
        self.engine = c.engine;
        self.adapter = c.adapter;
    }

    fn refuse<T>(&mut self, operator: &str, kind: ViolationKind, reason: String) -> Res<T> {
        let v = OperatorViolation {
            operator: operator.to_string(),
            kind,
            reason,
        };
        self.violations.push(v.clone());
        Err(AdaptationError::Refused(v))
    }

    /// Runs `change` against the target model and, unless batched,
    /// propagates it: backward sync, flush, pump, forward sync. Any error
    /// restores the models.
    fn step(
        &mut self,
        operator: &str,
        args: Vec<String>,
        change: impl FnOnce(&mut Self) -> Res<()>,
    ) -> Res<()> {
        let saved = self.checkpoint();
        if self.batched && self.batch_start.is_none() {
            self.batch_start = Some(saved.clone());
        }
        let result = change(self).and_then(|_| {
            if self.batched {
                Ok((None, None, None))
            } else {
                self.propagate()
                    .map(|(b, c, f)| (Some(b), Some(c), Some(f)))
            }
        });
        match result {
            Ok((backward, batch, forward)) => {
                self.log.push(StepRecord {
                    step: self.log.len() + 1,
                    operator: operator.to_string(),
                    args,
                    backward,
                    batch,
                    forward,
                    dismissed: false,
                });
                Ok(())
            }
            Err(e) => {
                self.restore(saved);
                Err(e)
            }
        }
    }

    fn propagate(&mut self) -> Res<(SyncReport, CommandBatch, SyncReport)> {
        let backward = self.engine.synchronize(Direction::Backward)?;
        let batch = self.adapter.flush_commands(self.engine.source_mut())?;
        self.adapter.pump_events(self.engine.source_mut())?;
        let forward = self.engine.synchronize(Direction::Forward)?;
        Ok((backward, batch, forward))
    }

    /// Propagates everything deferred since batching began, as one command
    /// batch. On error every model returns to its state before the batch.
    pub fn commit(&mut self) -> Res<StepRecord> {
        let start = self.batch_start.take();
        match self.propagate() {
            Ok((backward, batch, forward)) => {
                let record = StepRecord {
                    step: self.log.len() + 1,
                    operator: "commit".into(),
                    args: Vec::new(),
                    backward: Some(backward),
                    batch: Some(batch),
                    forward: Some(forward),
                    dismissed: false,
                };
                self.log.push(record.clone());
                Ok(record)
            }
            Err(e) => {
                if let Some(c) = start {
                    self.restore(c);
                }
                Err(e)
            }
        }
    }

    /// Drops everything deferred since batching began. Returns whether
    /// anything was pending.
    pub fn dismiss(&mut self) -> bool {
        let Some(start) = self.batch_start.take() else {
            return false;
        };
        self.restore(start);
        self.log.push(StepRecord {
            step: self.log.len() + 1,
            operator: "dismiss".into(),
            args: Vec::new(),
            backward: None,
            batch: None,
            forward: None,
            dismissed: true,
        });
        true
    }

    fn expect_type(&self, uid: &str, type_name: &str) -> bool {
        self.engine.target().is_instance(uid, type_name)
    }

    /// Target uid paired with `uid` through a link of `corr_type`.
    fn partner(&self, domain: Domain, uid: &str, corr_type: &str) -> Option<String> {
        let corr = self.engine.corr();
        let other = match domain {
            Domain::Source => Domain::Target,
            Domain::Target => Domain::Source,
        };
        corr.links_of(domain, uid)
            .filter_map(|id| corr.get(id))
            .find(|l| l.corr_type == corr_type)
            .and_then(|l| l.side(other).first().cloned())
    }

    /// Creates a component of type `component_type` through the factory
    /// registered for the type's source counterpart. The component appears
    /// undeployed once the new module has been synchronized forward.
    pub fn instantiate(&mut self, component_type: &str) -> Res<String> {
        let Some(module_type) = self
            .expect_type(component_type, "ComponentType")
            .then(|| self.partner(Domain::Target, component_type, "CorrModuleType"))
            .flatten()
        else {
            return Err(AdaptationError::UnknownComponentType(
                component_type.to_string(),
            ));
        };
        let source_type = self
            .engine
            .source()
            .get(&module_type)
            .map(|e| e.type_name.clone())
            .unwrap_or_default();
        let factory = self.factories.get(&source_type).cloned().ok_or_else(|| {
            AdaptationError::FactoryFailure {
                type_uid: module_type.clone(),
                reason: format!("no factory for {source_type}"),
            }
        })?;
        let saved = self.checkpoint();
        if self.batched && self.batch_start.is_none() {
            self.batch_start = Some(saved.clone());
        }
        let run = |s: &mut Self| -> Res<(String, Option<CommandBatch>, SyncReport)> {
            let module = factory.instantiate(s.engine.source_mut(), &module_type)?;
            let batch = if s.batched {
                None
            } else {
                let b = s.adapter.flush_commands(s.engine.source_mut())?;
                s.adapter.pump_events(s.engine.source_mut())?;
                Some(b)
            };
            let forward = s.engine.synchronize(Direction::Forward)?;
            let component = s
                .partner(Domain::Source, &module, "CorrModule")
                .ok_or_else(|| AdaptationError::FactoryFailure {
                    type_uid: module_type.clone(),
                    reason: format!("{module} has no target image"),
                })?;
            Ok((component, batch, forward))
        };
        match run(self) {
            Ok((component, batch, forward)) => {
                self.log.push(StepRecord {
                    step: self.log.len() + 1,
                    operator: "instantiate".into(),
                    args: vec![component_type.to_string(), component.clone()],
                    backward: None,
                    batch,
                    forward: Some(forward),
                    dismissed: false,
                });
                Ok(component)
            }
            Err(e) => {
                self.restore(saved);
                Err(e)
            }
        }
    }

    /// Moves a component one step along its lifecycle.
    pub fn set_lifecycle(&mut self, component: &str, state: LifecycleState) -> Res<()> {
        const OP: &str = "set_lifecycle";
        if !self.expect_type(component, "Component") {
            return Err(AdaptationError::UnknownComponent(component.to_string()));
        }
        let target = self.engine.target();
        let from = target
            .attr(component, "state")
            .and_then(LifecycleState::from_value)
            .unwrap_or(LifecycleState::Undeployed);
        if from != state && !from.can_move_to(state) {
            return self.refuse(
                OP,
                ViolationKind::IllegalTransition,
                format!("{component} cannot move from {from} to {state}"),
            );
        }
        if from == LifecycleState::Deployed && state == LifecycleState::Started {
            if let Some(r) = target
                .slot(component, "required")
                .iter()
                .find(|r| target.slot(r, "connectors").is_empty())
            {
                let r = r.clone();
                return self.refuse(
                    OP,
                    ViolationKind::UnwiredStart,
                    format!("{component} requires {r}, which is unwired"),
                );
            }
        }
        self.step(OP, vec![component.to_string(), state.to_string()], |s| {
            s.engine
                .target_mut()
                .set_attribute(component, "state", state.value())?;
            Ok(())
        })
    }

    /// Sets a component property; allowed in every lifecycle state.
    pub fn set_property(&mut self, property: &str, value: &str) -> Res<()> {
        if !self.expect_type(property, "Property") {
            return Err(AdaptationError::UnknownProperty(property.to_string()));
        }
        self.step(
            "set_property",
            vec![property.to_string(), value.to_string()],
            |s| {
                s.engine
                    .target_mut()
                    .set_attribute(property, "value", Value::text(value))?;
                Ok(())
            },
        )
    }

    fn interface_role(&self, interface: &str) -> Option<&str> {
        self.engine.target().parent(interface).map(|(_, slot)| slot)
    }

    fn interface_type_name(&self, interface: &str) -> Option<String> {
        let t = self.engine.target();
        t.slot(interface, "type")
            .first()
            .and_then(|it| t.text(it, "name"))
            .map(str::to_string)
    }

    /// Wires a required interface to a provided interface of the same
    /// interface type name. Returns the new connector's uid.
    pub fn connect(&mut self, required: &str, provided: &str) -> Res<String> {
        const OP: &str = "connect";
        for i in [required, provided] {
            if !self.expect_type(i, "Interface") {
                return Err(AdaptationError::UnknownInterface(i.to_string()));
            }
        }
        if self.interface_role(required) != Some("required")
            || self.interface_role(provided) != Some("provided")
        {
            return self.refuse(
                OP,
                ViolationKind::RoleMismatch,
                format!("{required} must be required and {provided} provided"),
            );
        }
        let (rt, pt) = (
            self.interface_type_name(required),
            self.interface_type_name(provided),
        );
        if rt != pt {
            return self.refuse(
                OP,
                ViolationKind::TypeMismatch,
                format!(
                    "{required} needs {} but {provided} offers {}",
                    rt.unwrap_or_default(),
                    pt.unwrap_or_default()
                ),
            );
        }
        if !self.engine.target().slot(required, "connectors").is_empty() {
            return self.refuse(
                OP,
                ViolationKind::AlreadyWired,
                format!("{required} is already wired"),
            );
        }
        let platform = self
            .engine
            .target()
            .roots()
            .first()
            .cloned()
            .ok_or_else(|| AdaptationError::UnknownInterface(required.to_string()))?;
        let mut created = String::new();
        self.step(OP, vec![required.to_string(), provided.to_string()], |s| {
            let t = s.engine.target_mut();
            let uid = t.fresh_uid("Connector");
            t.create_element(
                "Connector",
                Some(&uid),
                [("name", Value::text(&uid))],
                Placement::child(&platform, "connectors"),
            )?;
            t.add_reference(&uid, "required", required)?;
            t.add_reference(&uid, "provided", provided)?;
            t.add_reference(required, "connectors", &uid)?;
            t.add_reference(provided, "connectors", &uid)?;
            created = uid;
            Ok(())
        })?;
        if let Some(r) = self.log.last_mut() {
            r.args.push(created.clone());
        }
        Ok(created)
    }

    /// Removes a connector.
    pub fn disconnect(&mut self, connector: &str) -> Res<()> {
        if !self.expect_type(connector, "Connector") {
            return Err(AdaptationError::UnknownConnector(connector.to_string()));
        }
        self.step("disconnect", vec![connector.to_string()], |s| {
            s.engine.target_mut().delete_element(connector)?;
            Ok(())
        })
    }

    /// Removes an undeployed, unwired component with its interfaces and
    /// properties.
    pub fn remove_component(&mut self, component: &str) -> Res<()> {
        const OP: &str = "remove_component";
        if !self.expect_type(component, "Component") {
            return Err(AdaptationError::UnknownComponent(component.to_string()));
        }
        let t = self.engine.target();
        let state = t
            .attr(component, "state")
            .and_then(LifecycleState::from_value);
        if state != Some(LifecycleState::Undeployed) {
            return self.refuse(
                OP,
                ViolationKind::StillDeployed,
                format!(
                    "{component} is {}",
                    state.map(|s| s.as_str()).unwrap_or("in no state")
                ),
            );
        }
        let wired = ["provided", "required"]
            .iter()
            .flat_map(|slot| t.slot(component, slot))
            .find(|i| !t.slot(i, "connectors").is_empty())
            .cloned();
        if let Some(i) = wired {
            return self.refuse(OP, ViolationKind::StillWired, format!("{i} is wired"));
        }
        self.step(OP, vec![component.to_string()], |s| {
            s.engine.target_mut().delete_element(component)?;
            Ok(())
        })
    }

    /// Removes a component type that has no components left.
    pub fn remove_component_type(&mut self, component_type: &str) -> Res<()> {
        const OP: &str = "remove_component_type";
        if !self.expect_type(component_type, "ComponentType") {
            return Err(AdaptationError::UnknownComponentType(
                component_type.to_string(),
            ));
        }
        let t = self.engine.target();
        let users: Vec<String> = t
            .referrers(component_type)
            .filter(|(_, r)| *r == "type")
            .map(|(u, _)| u.to_string())
            .collect();
        if !users.is_empty() {
            return self.refuse(
                OP,
                ViolationKind::TypeInUse,
                format!("{component_type} is used by {}", users.join(", ")),
            );
        }
        self.step(OP, vec![component_type.to_string()], |s| {
            s.engine.target_mut().delete_element(component_type)?;
            Ok(())
        })
    }

    /// Applies an arbitrary target-model edit if it is one of the operators,
    /// and refuses it otherwise.
    pub fn apply(&mut self, mutation: TargetMutation) -> Res<()> {
        let t = self.engine.target();
        let type_of = |uid: &str| t.get(uid).map(|e| e.type_name.clone()).unwrap_or_default();
        match &mutation {
            TargetMutation::SetAttribute {
                uid,
                attribute,
                value,
            } => match (type_of(uid).as_str(), attribute.as_str()) {
                ("Property", "value") => {
                    if let Some(v) = value.as_text() {
                        return self.set_property(uid, v);
                    }
                }
                ("Component", "state") => {
                    if let Some(s) = LifecycleState::from_value(value) {
                        return self.set_lifecycle(uid, s);
                    }
                }
                _ => {}
            },
            TargetMutation::DeleteElement { uid } => match type_of(uid).as_str() {
                "Connector" => return self.disconnect(uid),
                "Component" => return self.remove_component(uid),
                "ComponentType" => return self.remove_component_type(uid),
                _ => {}
            },
            _ => {}
        }
        let reason = not_an_operator(&mutation, &type_of);
        self.refuse("apply", ViolationKind::NotAnOperator, reason)
    }
}

fn not_an_operator(m: &TargetMutation, type_of: &dyn Fn(&str) -> String) -> String {
    match m {
        TargetMutation::DeleteElement { uid } if type_of(uid) == "Interface" => {
            format!("{uid}: the component implementation requires the corresponding functionality")
        }
        TargetMutation::CreateElement { type_name, .. } if type_name == "Component" => {
            "components are created by instantiating a component type".into()
        }
        TargetMutation::CreateElement { type_name, .. } if type_name == "Connector" => {
            "connectors are created by connect".into()
        }
        TargetMutation::CreateElement { type_name, .. } => {
            format!("{type_name} elements cannot be created")
        }
        TargetMutation::DeleteElement { uid } => {
            format!("{} {uid} cannot be deleted", type_of(uid))
        }
        TargetMutation::SetAttribute {
            uid,
            attribute,
            value,
        } => {
            format!(
                "{}.{attribute} of {uid} cannot be set to {value}",
                type_of(uid)
            )
        }
        TargetMutation::AddReference { uid, reference, .. }
        | TargetMutation::RemoveReference { uid, reference, .. } => {
            format!("{}.{reference} of {uid} cannot be edited", type_of(uid))
        }
    }
}
