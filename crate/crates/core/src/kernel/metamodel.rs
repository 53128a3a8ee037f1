//! Metamodels: named node types with single inheritance, typed attributes and
//! references (containment or cross).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::value::Value;
use super::KernelError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKind {
    Text,
    Integer,
    Boolean,
    Enumeration(Vec<String>),
}

impl AttrKind {
    pub fn accepts(&self, value: &Value) -> bool {
        match (self, value) {
            (AttrKind::Text, Value::Text(_)) => true,
            (AttrKind::Integer, Value::Int(_)) => true,
            (AttrKind::Boolean, Value::Bool(_)) => true,
            (AttrKind::Enumeration(literals), Value::Text(s)) => literals.iter().any(|l| l == s),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttrKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub name: String,
    pub target: String,
    pub containment: bool,
    pub lower: u32,
    /// `None` is unbounded.
    pub upper: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    pub name: String,
    #[serde(rename = "abstract")]
    pub is_abstract: bool,
    pub supertype: Option<String>,
    pub attributes: Vec<AttributeSpec>,
    pub references: Vec<ReferenceSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metamodel {
    pub name: String,
    pub node_types: BTreeMap<String, NodeType>,
}

impl Metamodel {
    pub fn builder(name: impl Into<String>) -> MetamodelBuilder {
        MetamodelBuilder {
            name: name.into(),
            types: Vec::new(),
        }
    }

    pub fn node_type(&self, name: &str) -> Option<&NodeType> {
        self.node_types.get(name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        self.node_types.contains_key(name)
    }

    /// The type itself followed by its supertypes, nearest first.
    pub fn chain<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a NodeType> + 'a {
        let mut next = self.node_types.get(name);
        std::iter::from_fn(move || {
            let current = next?;
            next = current
                .supertype
                .as_deref()
                .and_then(|s| self.node_types.get(s));
            Some(current)
        })
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        self.chain(sub).any(|t| t.name == sup)
    }

    pub fn attribute(&self, type_name: &str, attr: &str) -> Option<&AttributeSpec> {
        self.chain(type_name)
            .flat_map(|t| t.attributes.iter())
            .find(|a| a.name == attr)
    }

    pub fn reference(&self, type_name: &str, reference: &str) -> Option<&ReferenceSpec> {
        self.chain(type_name)
            .flat_map(|t| t.references.iter())
            .find(|r| r.name == reference)
    }

    pub fn all_attributes(&self, type_name: &str) -> Vec<&AttributeSpec> {
        self.chain(type_name)
            .flat_map(|t| t.attributes.iter())
            .collect()
    }

    pub fn all_references(&self, type_name: &str) -> Vec<&ReferenceSpec> {
        self.chain(type_name)
            .flat_map(|t| t.references.iter())
            .collect()
    }

    /// Concrete and abstract types that are `name` or inherit from it.
    pub fn subtypes_of(&self, name: &str) -> Vec<&str> {
        self.node_types
            .keys()
            .filter(|t| self.is_subtype(t, name))
            .map(String::as_str)
            .collect()
    }
}

pub struct MetamodelBuilder {
    name: String,
    types: Vec<NodeType>,
}

impl MetamodelBuilder {
    pub fn node(self, name: &str) -> NodeBuilder {
        NodeBuilder {
            parent: self,
            node: NodeType {
                name: name.to_string(),
                is_abstract: false,
                supertype: None,
                attributes: Vec::new(),
                references: Vec::new(),
            },
        }
    }

    pub fn build(self) -> Result<Metamodel, KernelError> {
        let mut node_types = BTreeMap::new();
        for t in self.types {
            if node_types.contains_key(&t.name) {
                return Err(KernelError::InvalidMetamodel(format!(
                    "duplicate node type {}",
                    t.name
                )));
            }
            node_types.insert(t.name.clone(), t);
        }
        let mm = Metamodel {
            name: self.name,
            node_types,
        };
        mm.validate()?;
        Ok(mm)
    }
}

pub struct NodeBuilder {
    parent: MetamodelBuilder,
    node: NodeType,
}

impl NodeBuilder {
    pub fn is_abstract(mut self) -> Self {
        self.node.is_abstract = true;
        self
    }

    pub fn extends(mut self, supertype: &str) -> Self {
        self.node.supertype = Some(supertype.to_string());
        self
    }

    pub fn attr(mut self, name: &str, kind: AttrKind) -> Self {
        self.node.attributes.push(AttributeSpec {
            name: name.to_string(),
            kind,
        });
        self
    }

    pub fn contains(self, name: &str, target: &str, lower: u32, upper: Option<u32>) -> Self {
        self.reference(name, target, true, lower, upper)
    }

    pub fn refers(self, name: &str, target: &str, lower: u32, upper: Option<u32>) -> Self {
        self.reference(name, target, false, lower, upper)
    }

    fn reference(
        mut self,
        name: &str,
        target: &str,
        containment: bool,
        lower: u32,
        upper: Option<u32>,
    ) -> Self {
        self.node.references.push(ReferenceSpec {
            name: name.to_string(),
            target: target.to_string(),
            containment,
            lower,
            upper,
        });
        self
    }

    /// Finishes this node and returns to the metamodel builder.
    pub fn done(mut self) -> MetamodelBuilder {
        self.parent.types.push(self.node);
        self.parent
    }
}

impl Metamodel {
    fn validate(&self) -> Result<(), KernelError> {
        let bad = |msg: String| Err(KernelError::InvalidMetamodel(msg));
        for t in self.node_types.values() {
            // acyclic supertype chain
            let mut seen = BTreeSet::new();
            let mut cur = Some(t.name.as_str());
            while let Some(name) = cur {
                if !seen.insert(name) {
                    return bad(format!("supertype cycle through {}", t.name));
                }
                let Some(nt) = self.node_types.get(name) else {
                    return bad(format!("unknown supertype {name} of {}", t.name));
                };
                cur = nt.supertype.as_deref();
            }
            let mut features = BTreeSet::new();
            for a in self.all_attributes(&t.name) {
                if !features.insert(a.name.as_str()) {
                    return bad(format!("duplicate feature {} on {}", a.name, t.name));
                }
                if let AttrKind::Enumeration(lits) = &a.kind {
                    if lits.is_empty() {
                        return bad(format!("enumeration {}.{} has no literals", t.name, a.name));
                    }
                }
            }
            for r in self.all_references(&t.name) {
                if !features.insert(r.name.as_str()) {
                    return bad(format!("duplicate feature {} on {}", r.name, t.name));
                }
                if !self.node_types.contains_key(&r.target) {
                    return bad(format!(
                        "reference {}.{} targets unknown {}",
                        t.name, r.name, r.target
                    ));
                }
                if matches!(r.upper, Some(u) if u == 0 || u < r.lower) {
                    return bad(format!("bad bounds on {}.{}", t.name, r.name));
                }
            }
            if features.contains("uid") {
                return bad(format!("{} redeclares the identity feature uid", t.name));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inheritance_lookup() {
        let mm = Metamodel::builder("m")
            .node("A")
            .is_abstract()
            .attr("name", AttrKind::Text)
            .done()
            .node("B")
            .extends("A")
            .refers("peer", "A", 0, None)
            .done()
            .build()
            .unwrap();
        assert!(mm.is_subtype("B", "A"));
        assert!(!mm.is_subtype("A", "B"));
        assert!(mm.attribute("B", "name").is_some());
        assert_eq!(mm.subtypes_of("A"), vec!["A", "B"]);
    }

    #[test]
    fn rejects_cycles_and_duplicates() {
        let cyc = Metamodel::builder("m")
            .node("A")
            .extends("B")
            .done()
            .node("B")
            .extends("A")
            .done()
            .build();
        assert!(matches!(cyc, Err(KernelError::InvalidMetamodel(_))));

        let dup = Metamodel::builder("m")
            .node("A")
            .attr("x", AttrKind::Text)
            .done()
            .node("B")
            .extends("A")
            .attr("x", AttrKind::Integer)
            .done()
            .build();
        assert!(dup.is_err());

        let empty_enum = Metamodel::builder("m")
            .node("A")
            .attr("e", AttrKind::Enumeration(vec![]))
            .done()
            .build();
        assert!(empty_enum.is_err());
    }
}
