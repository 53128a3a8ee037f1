//! Source-model images of container entities.

use crate::kernel::{KernelError, Model, Placement, Value};
use crate::metamodels::build_source_metamodel;

use super::container::{BeanKind, CallRecord, Container, Instance, Module, ModuleTemplate, Wiring};
use super::naming;

type R<T = ()> = Result<T, KernelError>;

fn named(name: &str) -> Vec<(&'static str, Value)> {
    vec![("name", Value::text(name))]
}

pub(crate) fn add_module_type(model: &mut Model, container: &str, t: &ModuleTemplate) -> R {
    let mt = model.create_element(
        "EjbModuleType",
        Some(&t.name),
        named(&t.name),
        Placement::child(container, "moduleTypes"),
    )?;
    for b in &t.beans {
        let ty = match b.kind {
            BeanKind::Session => "SessionBeanType",
            BeanKind::MessageDriven => "MessageDrivenBeanType",
        };
        let bt = naming::bean_type(&mt, &b.name);
        model.create_element(
            ty,
            Some(&bt),
            named(&b.name),
            Placement::child(&mt, "beanTypes"),
        )?;
        for i in &b.interfaces {
            let uid = naming::interface_type(&bt, i);
            model.create_element(
                "EjbInterfaceType",
                Some(&uid),
                named(i),
                Placement::child(&bt, "interfaceTypes"),
            )?;
        }
        for r in &b.references {
            let uid = naming::reference_type(&bt, r);
            model.create_element(
                "EjbReferenceType",
                Some(&uid),
                named(r),
                Placement::child(&bt, "referenceTypes"),
            )?;
        }
        for e in &b.entries {
            let uid = naming::entry_type(&bt, &e.name);
            let mut attrs = named(&e.name);
            attrs.push(("value_type", Value::text(&e.value_type)));
            model.create_element(
                "SimpleEnvironmentEntryType",
                Some(&uid),
                attrs,
                Placement::child(&bt, "entryTypes"),
            )?;
        }
    }
    Ok(())
}

pub(crate) fn add_module(model: &mut Model, container: &Container, m: &Module) -> R {
    let template = container
        .template(&m.module_type)
        .ok_or_else(|| KernelError::UnknownUid(m.module_type.clone()))?;
    let mut attrs = named(&m.name);
    attrs.push(("state", m.state.value()));
    let mu = model.create_element(
        "EjbModule",
        Some(&m.name),
        attrs,
        Placement::child(&container.name, "modules"),
    )?;
    model.add_reference(&mu, "type", &m.module_type)?;
    for b in &m.beans {
        let Some(bt) = template.beans.iter().find(|t| t.name == b.name) else {
            return Err(KernelError::UnknownUid(b.uid.clone()));
        };
        let ty = match bt.kind {
            BeanKind::Session => "SessionBean",
            BeanKind::MessageDriven => "MessageDrivenBean",
        };
        let bean_type = naming::bean_type(&m.module_type, &bt.name);
        model.create_element(
            ty,
            Some(&b.uid),
            named(&b.name),
            Placement::child(&mu, "beans"),
        )?;
        model.add_reference(&b.uid, "type", &bean_type)?;
        if bt.kind == BeanKind::Session {
            for i in &bt.interfaces {
                let uid = naming::interface(&b.uid, i);
                model.create_element(
                    "EjbInterface",
                    Some(&uid),
                    named(i),
                    Placement::child(&b.uid, "interfaces"),
                )?;
                model.add_reference(&uid, "type", &naming::interface_type(&bean_type, i))?;
            }
        }
        for r in &bt.references {
            let uid = naming::reference(&b.uid, r);
            model.create_element(
                "EjbReference",
                Some(&uid),
                named(r),
                Placement::child(&b.uid, "references"),
            )?;
            model.add_reference(&uid, "type", &naming::reference_type(&bean_type, r))?;
        }
        for e in &b.entries {
            let uid = naming::entry(&b.uid, &e.name);
            let mut attrs = named(&e.name);
            attrs.push(("value", Value::text(&e.value)));
            model.create_element(
                "SimpleEnvironmentEntry",
                Some(&uid),
                attrs,
                Placement::child(&b.uid, "entries"),
            )?;
            model.add_reference(&uid, "type", &naming::entry_type(&bean_type, &e.name))?;
        }
        for inst in &b.instances {
            add_instance(model, &b.uid, inst)?;
        }
    }
    Ok(())
}

pub(crate) fn add_instance(model: &mut Model, bean: &str, inst: &Instance) -> R {
    model.create_element(
        "BeanInstance",
        Some(&inst.uid),
        named(&inst.uid),
        Placement::child(bean, "instances"),
    )?;
    for c in &inst.calls {
        add_call(model, &inst.uid, c)?;
    }
    Ok(())
}

pub(crate) fn add_call(model: &mut Model, instance: &str, c: &CallRecord) -> R {
    model.create_element(
        "Call",
        Some(&c.uid),
        Vec::<(String, Value)>::new(),
        Placement::child(instance, "calls"),
    )?;
    model.add_reference(&c.uid, "interface", &c.interface)?;
    if let Some(ex) = &c.exception {
        model.create_element(
            "ThrownException",
            Some(&naming::exception(&c.uid)),
            [("exception_type", Value::text(ex))],
            Placement::child(&c.uid, "exception"),
        )?;
    }
    Ok(())
}

pub(crate) fn add_wiring(model: &mut Model, container: &str, w: &Wiring) -> R {
    model.create_element(
        "EjbConnector",
        Some(&w.connector),
        named(&w.connector),
        Placement::child(container, "connectors"),
    )?;
    model.add_reference(&w.connector, "reference", &w.reference)?;
    model.add_reference(&w.connector, "interface", &w.interface)?;
    Ok(())
}

/// Builds the source model of `container` from scratch.
pub fn source_model_of(container: &Container) -> Result<Model, KernelError> {
    let mut model = Model::new(build_source_metamodel());
    model.create_element(
        "EjbContainer",
        Some(&container.name),
        named(&container.name),
        Placement::Root,
    )?;
    for t in container.templates() {
        add_module_type(&mut model, &container.name, t)?;
    }
    for m in container.modules() {
        add_module(&mut model, container, m)?;
    }
    for w in container.wirings() {
        add_wiring(&mut model, &container.name, w)?;
    }
    Ok(model)
}
