//! Hierarchical JSON form of a model.
//!
//! `{"metamodel": name, "elements": [element...]}` where each element is
//! `{"uid", "type", "attrs": {..}, "refs": {..}}`. Containment slots hold
//! nested element objects, cross-reference slots hold uid strings. Empty
//! `attrs`/`refs` maps are omitted.

use std::sync::Arc;

use serde_json::{json, Map, Value as Json};

use super::metamodel::Metamodel;
use super::model::{Model, Placement};
use super::value::Value;
use super::KernelError;

pub fn to_json(model: &Model) -> Json {
    let elements: Vec<Json> = model
        .roots()
        .iter()
        .map(|r| element_json(model, r))
        .collect();
    json!({
        "metamodel": model.metamodel().name,
        "elements": elements,
    })
}

fn element_json(model: &Model, uid: &str) -> Json {
    let e = model.get(uid).expect("root/child in index");
    let mm = model.metamodel();
    let mut obj = Map::new();
    obj.insert("uid".into(), Json::String(e.uid.clone()));
    obj.insert("type".into(), Json::String(e.type_name.clone()));
    if !e.attribute_values.is_empty() {
        let attrs: Map<String, Json> = e
            .attribute_values
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("plain value")))
            .collect();
        obj.insert("attrs".into(), Json::Object(attrs));
    }
    let mut refs = Map::new();
    for (name, slot) in &e.reference_slots {
        if slot.is_empty() {
            continue;
        }
        let containment = mm
            .reference(&e.type_name, name)
            .is_some_and(|r| r.containment);
        let items: Vec<Json> = if containment {
            slot.iter().map(|c| element_json(model, c)).collect()
        } else {
            slot.iter().map(|t| Json::String(t.clone())).collect()
        };
        refs.insert(name.clone(), Json::Array(items));
    }
    if !refs.is_empty() {
        obj.insert("refs".into(), Json::Object(refs));
    }
    Json::Object(obj)
}

pub fn to_string_pretty(model: &Model) -> String {
    serde_json::to_string_pretty(&to_json(model)).expect("json values always serialize")
}

pub fn from_str(text: &str, metamodel: Arc<Metamodel>) -> Result<Model, KernelError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| KernelError::Json(e.to_string()))?;
    from_json(&doc, metamodel)
}

pub fn from_json(doc: &Json, metamodel: Arc<Metamodel>) -> Result<Model, KernelError> {
    let bad = |m: &str| KernelError::Json(m.to_string());
    let name = doc
        .get("metamodel")
        .and_then(Json::as_str)
        .ok_or_else(|| bad("missing metamodel name"))?;
    if name != metamodel.name {
        return Err(KernelError::Json(format!(
            "document is a {name} model, expected {}",
            metamodel.name
        )));
    }
    let elements = doc
        .get("elements")
        .and_then(Json::as_array)
        .ok_or_else(|| bad("missing elements array"))?;
    let mut model = Model::new(metamodel);
    let mut cross = Vec::new();
    for e in elements {
        load_element(&mut model, e, Placement::Root, &mut cross)?;
    }
    for (uid, reference, target) in cross {
        model.add_reference(&uid, &reference, &target)?;
    }
    Ok(model)
}

fn load_element(
    model: &mut Model,
    e: &Json,
    placement: Placement,
    cross: &mut Vec<(String, String, String)>,
) -> Result<(), KernelError> {
    let bad = |m: &str| KernelError::Json(m.to_string());
    let uid = e
        .get("uid")
        .and_then(Json::as_str)
        .ok_or_else(|| bad("element without uid"))?;
    let ty = e
        .get("type")
        .and_then(Json::as_str)
        .ok_or_else(|| bad("element without type"))?;
    let mut attrs = Vec::new();
    if let Some(map) = e.get("attrs") {
        let map = map
            .as_object()
            .ok_or_else(|| bad("attrs must be an object"))?;
        for (k, v) in map {
            let value: Value = serde_json::from_value(v.clone())
                .map_err(|err| KernelError::Json(err.to_string()))?;
            attrs.push((k.clone(), value));
        }
    }
    model.create_element(ty, Some(uid), attrs, placement)?;
    if let Some(refs) = e.get("refs") {
        let refs = refs
            .as_object()
            .ok_or_else(|| bad("refs must be an object"))?;
        for (name, items) in refs {
            let items = items
                .as_array()
                .ok_or_else(|| bad("ref slot must be an array"))?;
            let containment = model
                .metamodel()
                .reference(ty, name)
                .ok_or_else(|| KernelError::UnknownReference {
                    type_name: ty.to_string(),
                    reference: name.clone(),
                })?
                .containment;
            for item in items {
                if containment {
                    load_element(model, item, Placement::child(uid, name.clone()), cross)?;
                } else {
                    let target = item
                        .as_str()
                        .ok_or_else(|| bad("cross reference must be a uid"))?;
                    cross.push((uid.to_string(), name.clone(), target.to_string()));
                }
            }
        }
    }
    Ok(())
}
