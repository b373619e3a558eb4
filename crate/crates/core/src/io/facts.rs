//! JSON fact documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AdjustmentSettings, AttrValue, FactBase, SpatialObject};

pub const FORMAT_VERSION: &str = "1";

/// One object as stored in a fact document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub h: f64,
    pub d: f64,
    #[serde(default)]
    pub angle: f64,
    #[serde(default)]
    pub label: String,
    #[serde(default, rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub confidence: BTreeMap<String, f64>,
    #[serde(default)]
    pub velocity: f64,
    #[serde(default, rename = "virtual")]
    pub is_virtual: bool,
    #[serde(default)]
    pub moving: bool,
    #[serde(default)]
    pub observer: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, AttrValue>,
}

impl From<&SpatialObject> for ObjectRecord {
    fn from(o: &SpatialObject) -> Self {
        Self {
            id: o.id.clone(),
            x: o.x,
            y: o.y,
            z: o.z,
            w: o.w,
            h: o.h,
            d: o.d,
            angle: o.angle,
            label: o.label.clone(),
            kind: o.kind.clone(),
            confidence: o.confidence.clone(),
            velocity: o.velocity,
            is_virtual: o.is_virtual,
            moving: o.moving,
            observer: o.observer,
            attributes: o.attributes.clone(),
        }
    }
}

impl From<ObjectRecord> for SpatialObject {
    fn from(r: ObjectRecord) -> Self {
        let mut o = SpatialObject::new(r.id).at(r.x, r.y, r.z).sized(r.w, r.h, r.d).rotated(r.angle);
        o.label = r.label;
        o.kind = r.kind;
        o.confidence.extend(r.confidence);
        o.velocity = r.velocity;
        o.is_virtual = r.is_virtual;
        o.moving = r.moving;
        o.observer = r.observer;
        o.attributes = r.attributes;
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactDocument {
    pub version: String,
    pub objects: Vec<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<AdjustmentSettings>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variables: BTreeMap<String, f64>,
}

/// Parses a fact document into a fact base plus its optional settings block.
pub fn load_document(text: &str) -> Result<(FactBase, Option<AdjustmentSettings>)> {
    let doc: FactDocument = serde_json::from_str(text)?;
    if doc.version != FORMAT_VERSION {
        return Err(Error::FactDocument(format!("unsupported version `{}`", doc.version)));
    }
    if let Some(s) = &doc.settings {
        s.validate()?;
    }
    let mut fb = FactBase::new();
    for (index, value) in doc.objects.into_iter().enumerate() {
        let fail = |message: String| Error::FactRecord { index, message };
        let record: ObjectRecord = serde_json::from_value(value).map_err(|e| fail(e.to_string()))?;
        if fb.contains(&record.id) {
            return Err(fail(format!("duplicate id `{}`", record.id)));
        }
        fb.upsert(record.into()).map_err(|e| fail(e.to_string()))?;
    }
    fb.variables = doc.variables;
    Ok((fb, doc.settings))
}

pub fn load_facts(text: &str) -> Result<FactBase> {
    load_document(text).map(|(fb, _)| fb)
}

/// Serializes `fb` (objects in insertion order) as pretty-printed JSON.
pub fn dump_facts(fb: &FactBase, settings: Option<&AdjustmentSettings>) -> Result<String> {
    let objects = fb
        .objects()
        .map(|o| serde_json::to_value(ObjectRecord::from(o)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let doc = FactDocument {
        version: FORMAT_VERSION.to_string(),
        objects,
        settings: settings.cloned(),
        variables: fb.variables.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let fb = load_facts(r#"{"version": "1", "objects": [{"id": "a", "x": 0, "y": 0, "z": 0, "w": 1, "h": 1, "d": 1}]}"#).unwrap();
        assert_eq!(fb.len(), 1);
        let a = fb.get("a").unwrap();
        assert_eq!(a.angle, 0.0);
        assert_eq!(a.confidence["overall"], 1.0);
        assert!(!a.observer);
    }

    #[test]
    fn record_errors_carry_index() {
        let dup = r#"{"version": "1", "objects": [
            {"id": "a", "x": 0, "y": 0, "z": 0, "w": 1, "h": 1, "d": 1},
            {"id": "a", "x": 0, "y": 0, "z": 0, "w": 1, "h": 1, "d": 1}]}"#;
        let e = load_facts(dup).unwrap_err();
        assert!(matches!(&e, Error::FactRecord { index: 1, message } if message.contains("`a`")));
        let missing = r#"{"version": "1", "objects": [{"id": "a", "x": 0, "y": 0, "z": 0, "w": 1, "h": 1}]}"#;
        assert!(matches!(load_facts(missing), Err(Error::FactRecord { index: 0, .. })));
        let negative = r#"{"version": "1", "objects": [{"id": "a", "x": 0, "y": 0, "z": 0, "w": -1, "h": 1, "d": 1}]}"#;
        assert!(matches!(load_facts(negative), Err(Error::FactRecord { index: 0, .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut o = SpatialObject::new("a").at(0.1, 1.0 / 3.0, -2.5e-7).sized(0.3, 2.0, 1e-3).rotated(1.234567890123);
        o.attributes.insert("shape".into(), AttrValue::Text("cubical".into()));
        o.confidence.insert("label".into(), 0.75);
        let mut fb = FactBase::from_objects([o, SpatialObject::new("b").labeled("chair")]).unwrap();
        fb.variables.insert("n".into(), 2.0);
        let text = dump_facts(&fb, Some(&AdjustmentSettings::default())).unwrap();
        let (back, settings) = load_document(&text).unwrap();
        assert_eq!(back.objects().cloned().collect::<Vec<_>>(), fb.objects().cloned().collect::<Vec<_>>());
        assert_eq!(back.variables, fb.variables);
        assert_eq!(settings, Some(AdjustmentSettings::default()));
    }
}
