//! Uid scheme shared by the container, the source model and the shipped
//! rules. Source uids are dotted paths below their module (type); target uids
//! put a type prefix in front of the source uid they were derived from.

pub fn bean_type(module_type: &str, bean: &str) -> String {
    format!("{module_type}.{bean}")
}

pub fn interface_type(bean_type: &str, name: &str) -> String {
    format!("{bean_type}.if.{name}")
}

pub fn reference_type(bean_type: &str, name: &str) -> String {
    format!("{bean_type}.ref.{name}")
}

pub fn entry_type(bean_type: &str, name: &str) -> String {
    format!("{bean_type}.env.{name}")
}

pub fn bean(module: &str, bean: &str) -> String {
    format!("{module}.{bean}")
}

pub fn interface(bean: &str, name: &str) -> String {
    format!("{bean}.if.{name}")
}

pub fn reference(bean: &str, name: &str) -> String {
    format!("{bean}.ref.{name}")
}

pub fn entry(bean: &str, name: &str) -> String {
    format!("{bean}.env.{name}")
}

pub fn instance(bean: &str, n: usize) -> String {
    format!("{bean}#{n}")
}

pub fn call(instance: &str, n: usize) -> String {
    format!("{instance}/call{n}")
}

pub fn exception(call: &str) -> String {
    format!("{call}/ex")
}

/// Module name a factory gives the first instance of a module type:
/// the type name without its trailing `T`.
pub fn module_for_type(module_type: &str) -> String {
    module_type
        .strip_suffix('T')
        .filter(|s| !s.is_empty())
        .unwrap_or(module_type)
        .to_string()
}

pub mod target {
    //! Target uids as derived by the shipped rules.

    pub fn platform(container: &str) -> String {
        format!("p:{container}")
    }

    pub fn component_type(module_type: &str) -> String {
        format!("ct:{module_type}")
    }

    /// Both provided (from an interface type) and required (from a
    /// reference type) interface types.
    pub fn interface_type(source_uid: &str) -> String {
        format!("it:{source_uid}")
    }

    pub fn property_type(entry_type: &str) -> String {
        format!("pt:{entry_type}")
    }

    pub fn component(module: &str) -> String {
        format!("c:{module}")
    }

    /// Both provided (from an EJB interface) and required (from an EJB
    /// reference) interfaces.
    pub fn interface(source_uid: &str) -> String {
        format!("i:{source_uid}")
    }

    pub fn property(entry: &str) -> String {
        format!("pr:{entry}")
    }

    pub fn failure(interface: &str, exception_type: &str) -> String {
        format!("f:{interface}:{exception_type}")
    }
}
