//! Object model, derived attributes, adjustment settings and the fact base.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::deduction::{Category, SpatialRelation};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Absolute tolerance for boundary comparisons (meters).
pub const EPS: f64 = 1e-9;

/// Value of a free-form object attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Number(n) => write!(f, "{n}"),
            AttrValue::Text(s) => write!(f, "'{s}'"),
        }
    }
}

/// A real or virtual entity represented by a yaw-oriented bounding box.
///
/// `(x, y, z)` is the center of the base footprint. `w` runs along the local
/// X axis, `d` along local Z and `h` up.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialObject {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub h: f64,
    pub d: f64,
    /// Yaw in radians, counter-clockwise about +Y viewed from above.
    pub angle: f64,
    pub label: String,
    pub kind: String,
    pub confidence: BTreeMap<String, f64>,
    /// Scalar speed in m/s.
    pub velocity: f64,
    pub is_virtual: bool,
    pub moving: bool,
    pub observer: bool,
    pub attributes: BTreeMap<String, AttrValue>,
}

pub const CONFIDENCE_OVERALL: &str = "overall";
pub const CONFIDENCE_LABEL: &str = "label";

impl SpatialObject {
    pub fn new(id: impl Into<String>) -> Self {
        let mut confidence = BTreeMap::new();
        confidence.insert(CONFIDENCE_LABEL.to_string(), 1.0);
        confidence.insert(CONFIDENCE_OVERALL.to_string(), 1.0);
        Self {
            id: id.into(),
            x: 0.0,
            y: 0.0,
            z: 0.0,
            w: 1.0,
            h: 1.0,
            d: 1.0,
            angle: 0.0,
            label: String::new(),
            kind: String::new(),
            confidence,
            velocity: 0.0,
            is_virtual: false,
            moving: false,
            observer: false,
            attributes: BTreeMap::new(),
        }
    }

    pub fn at(mut self, x: f64, y: f64, z: f64) -> Self {
        self.x = x;
        self.y = y;
        self.z = z;
        self
    }

    pub fn sized(mut self, w: f64, h: f64, d: f64) -> Self {
        self.w = w;
        self.h = h;
        self.d = d;
        self
    }

    pub fn rotated(mut self, angle: f64) -> Self {
        self.angle = angle;
        self
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn typed(mut self, kind: impl Into<String>) -> Self {
        self.kind = kind.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidObject("empty id".into()));
        }
        for (name, v) in [
            ("x", self.x),
            ("y", self.y),
            ("z", self.z),
            ("w", self.w),
            ("h", self.h),
            ("d", self.d),
            ("angle", self.angle),
            ("velocity", self.velocity),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidObject(format!("`{}`: {name} is not finite", self.id)));
            }
        }
        for (name, v) in [("w", self.w), ("h", self.h), ("d", self.d)] {
            if v < 0.0 {
                return Err(Error::InvalidObject(format!("`{}`: negative extent {name} = {v}", self.id)));
            }
        }
        for (aspect, c) in &self.confidence {
            if !(0.0..=1.0).contains(c) {
                return Err(Error::InvalidObject(format!(
                    "`{}`: confidence.{aspect} = {c} outside [0, 1]",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn base(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Volumetric center: base position lifted by half the height.
    pub fn center(&self) -> Vec3 {
        Vec3::new(self.x, self.y + self.h / 2.0, self.z)
    }

    pub fn top(&self) -> f64 {
        self.y + self.h
    }

    pub fn yaw_degrees(&self) -> f64 {
        self.angle.to_degrees()
    }

    pub fn footprint(&self) -> f64 {
        self.w * self.d
    }

    pub fn volume(&self) -> f64 {
        self.w * self.h * self.d
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.w + self.d)
    }

    /// Longest horizontal extent.
    pub fn length(&self) -> f64 {
        self.w.max(self.d)
    }

    /// Half of the box diagonal.
    pub fn radius(&self) -> f64 {
        (self.w * self.w + self.h * self.h + self.d * self.d).sqrt() / 2.0
    }

    pub fn front_area(&self) -> f64 {
        self.w * self.h
    }

    pub fn side_area(&self) -> f64 {
        self.d * self.h
    }

    pub fn surface(&self) -> f64 {
        2.0 * (self.w * self.h + self.w * self.d + self.h * self.d)
    }

    pub fn is_moving(&self) -> bool {
        self.moving || self.velocity > 0.0
    }

    pub fn shape(&self) -> Option<&str> {
        match self.attributes.get("shape") {
            Some(AttrValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn derived(&self, settings: &AdjustmentSettings) -> DerivedAttributes {
        derive_attributes(self, settings)
    }

    /// Reads an attribute by (dotted) name, including derived ones.
    pub fn attribute(&self, key: &str, settings: &AdjustmentSettings) -> Option<AttrValue> {
        use AttrValue::*;
        let num = |v: f64| Some(Number(v));
        match key {
            "id" => Some(Text(self.id.clone())),
            "label" => Some(Text(self.label.clone())),
            "type" => Some(Text(self.kind.clone())),
            "x" => num(self.x),
            "y" => num(self.y),
            "z" => num(self.z),
            "w" | "width" => num(self.w),
            "h" | "height" => num(self.h),
            "d" | "depth" => num(self.d),
            "angle" => num(self.angle),
            "yaw" => num(self.yaw_degrees()),
            "velocity" => num(self.velocity),
            "footprint" => num(self.footprint()),
            "volume" => num(self.volume()),
            "perimeter" => num(self.perimeter()),
            "length" => num(self.length()),
            "radius" => num(self.radius()),
            "frontarea" => num(self.front_area()),
            "sidearea" => num(self.side_area()),
            "surface" => num(self.surface()),
            "confidence" => self.confidence.get(CONFIDENCE_OVERALL).copied().map(Number),
            "virtual" => Some(Bool(self.is_virtual)),
            "moving" => Some(Bool(self.is_moving())),
            "observer" => Some(Bool(self.observer)),
            "equilateral" => Some(Bool(self.derived(settings).equilateral)),
            "thin" => Some(Bool(self.derived(settings).thin)),
            "long" => Some(Bool(self.derived(settings).long)),
            _ => {
                if let Some(aspect) = key.strip_prefix("confidence.") {
                    return self.confidence.get(aspect).copied().map(Number);
                }
                self.attributes.get(key).cloned()
            }
        }
    }

    /// Writes an attribute. `allow_id` is only set when producing new objects.
    pub fn set_attribute(&mut self, key: &str, value: AttrValue, allow_id: bool) -> Result<()> {
        let bad = |what: &str| Error::InvalidObject(format!("`{key}` expects {what}, got {value}"));
        let number = || match value {
            AttrValue::Number(n) if n.is_finite() => Ok(n),
            _ => Err(bad("a number")),
        };
        let text = || match &value {
            AttrValue::Text(s) => Ok(s.clone()),
            _ => Err(bad("a string")),
        };
        let boolean = || match value {
            AttrValue::Bool(b) => Ok(b),
            _ => Err(bad("a boolean")),
        };
        let extent = || {
            let n = number()?;
            if n < 0.0 {
                Err(Error::InvalidObject(format!("negative extent {key} = {n}")))
            } else {
                Ok(n)
            }
        };
        let unit = |n: f64| {
            if (0.0..=1.0).contains(&n) {
                Ok(n)
            } else {
                Err(Error::InvalidObject(format!("{key} = {n} outside [0, 1]")))
            }
        };
        match key {
            "id" if allow_id => {
                let id = text()?;
                if id.is_empty() {
                    return Err(Error::InvalidObject("empty id".into()));
                }
                self.id = id;
            }
            "id" => return Err(Error::InvalidObject("id is immutable".into())),
            "label" => self.label = text()?,
            "type" => self.kind = text()?,
            "x" => self.x = number()?,
            "y" => self.y = number()?,
            "z" => self.z = number()?,
            "w" | "width" => self.w = extent()?,
            "h" | "height" => self.h = extent()?,
            "d" | "depth" => self.d = extent()?,
            "angle" => self.angle = number()?,
            "yaw" => self.angle = number()?.to_radians(),
            "velocity" => self.velocity = number()?,
            "confidence" => {
                let c = unit(number()?)?;
                self.confidence.insert(CONFIDENCE_OVERALL.into(), c);
            }
            "virtual" => self.is_virtual = boolean()?,
            "moving" => self.moving = boolean()?,
            "observer" => self.observer = boolean()?,
            "footprint" | "volume" | "perimeter" | "length" | "radius" | "frontarea" | "sidearea"
            | "surface" | "equilateral" | "thin" | "long" => {
                return Err(Error::InvalidObject(format!("`{key}` is derived and read-only")))
            }
            _ => {
                if let Some(aspect) = key.strip_prefix("confidence.") {
                    let c = unit(number()?)?;
                    self.confidence.insert(aspect.to_string(), c);
                } else {
                    if let AttrValue::Number(n) = value {
                        if !n.is_finite() {
                            return Err(bad("a finite number"));
                        }
                    }
                    self.attributes.insert(key.to_string(), value);
                }
            }
        }
        Ok(())
    }
}

/// Metric and boolean attributes computed from an object's extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedAttributes {
    pub footprint: f64,
    pub volume: f64,
    pub perimeter: f64,
    pub length: f64,
    pub center: Vec3,
    pub radius: f64,
    pub equilateral: bool,
    pub thin: bool,
    pub long: bool,
}

pub fn derive_attributes(obj: &SpatialObject, settings: &AdjustmentSettings) -> DerivedAttributes {
    let (w, h, d) = (obj.w, obj.h, obj.d);
    let min_dim = w.min(h).min(d);
    let max_dim = w.max(h).max(d);
    DerivedAttributes {
        footprint: obj.footprint(),
        volume: obj.volume(),
        perimeter: obj.perimeter(),
        length: obj.length(),
        center: obj.center(),
        radius: obj.radius(),
        equilateral: (w - d).abs() <= settings.max_gap && (w - h).abs() <= settings.max_gap,
        thin: min_dim <= max_dim / settings.thin_ratio,
        long: obj.length() >= settings.long_ratio * w.min(d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorSchema {
    /// Reach is `sector_factor` meters on every axis.
    Fixed,
    /// Reach is `sector_factor` times the box extent along that axis.
    Dimension,
    /// Reach is the nearby radius of the reference object.
    Nearby,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NearbySchema {
    /// Radius is `nearby_factor` meters.
    Fixed,
    /// Radius is `nearby_factor` times the summed bounding-sphere radii.
    Dimension,
    /// Dimension rule with the default multiplier, capped at `nearby_factor` meters.
    Limit,
}

/// Multiplier of the dimension rule when the `limit` schema caps it.
pub const LIMIT_DIMENSION_FACTOR: f64 = 2.0;

/// Tunable thresholds for deduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjustmentSettings {
    pub max_gap: f64,
    pub max_angle: f64,
    pub sector_schema: SectorSchema,
    pub sector_factor: f64,
    pub nearby_schema: NearbySchema,
    pub nearby_factor: f64,
    pub long_ratio: f64,
    pub thin_ratio: f64,
    /// Unit vector `[x, z]` in the horizontal plane pointing north.
    pub north: [f64; 2],
}

impl Default for AdjustmentSettings {
    fn default() -> Self {
        Self {
            max_gap: 0.02,
            max_angle: 5f64.to_radians(),
            sector_schema: SectorSchema::Fixed,
            sector_factor: 1.0,
            nearby_schema: NearbySchema::Dimension,
            nearby_factor: 2.0,
            long_ratio: 4.0,
            thin_ratio: 10.0,
            north: [0.0, 1.0],
        }
    }
}

impl AdjustmentSettings {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSettings(m));
        if !(self.max_gap > 0.0 && self.max_gap.is_finite()) {
            return fail(format!("max gap must be positive, got {}", self.max_gap));
        }
        if !(self.max_angle > 0.0 && self.max_angle < std::f64::consts::FRAC_PI_2) {
            return fail(format!("max angle must lie in (0, pi/2), got {}", self.max_angle));
        }
        for (name, v) in [
            ("sector factor", self.sector_factor),
            ("nearby factor", self.nearby_factor),
            ("long ratio", self.long_ratio),
            ("thin ratio", self.thin_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        let [nx, nz] = self.north;
        let norm = (nx * nx + nz * nz).sqrt();
        if !((norm - 1.0).abs() < 1e-6) {
            return fail(format!("north direction must be a unit vector, got [{nx}, {nz}]"));
        }
        Ok(())
    }

    /// Scales every length-valued threshold by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut s = self.clone();
        s.max_gap *= k;
        if s.sector_schema == SectorSchema::Fixed {
            s.sector_factor *= k;
        }
        if matches!(s.nearby_schema, NearbySchema::Fixed | NearbySchema::Limit) {
            s.nearby_factor *= k;
        }
        s
    }
}

/// Objects keyed by id (insertion ordered) plus deduced relations and calc variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactBase {
    objects: IndexMap<String, SpatialObject>,
    relations: Vec<SpatialRelation>,
    pub variables: BTreeMap<String, f64>,
    deduced: BTreeSet<Category>,
}

impl FactBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_objects(objects: impl IntoIterator<Item = SpatialObject>) -> Result<Self> {
        let mut fb = Self::new();
        for obj in objects {
            if fb.contains(&obj.id) {
                return Err(Error::InvalidObject(format!("duplicate id `{}`", obj.id)));
            }
            fb.upsert(obj)?;
        }
        Ok(fb)
    }

    /// Inserts or replaces an object by id. Relations mentioning the id are
    /// dropped and every category must be deduced again.
    pub fn upsert(&mut self, obj: SpatialObject) -> Result<()> {
        obj.validate()?;
        if let Some(existing) = self.objects.get(&obj.id) {
            if *existing == obj {
                return Ok(());
            }
        }
        let id = obj.id.clone();
        self.relations.retain(|r| r.subject != id && r.object != id);
        self.deduced.clear();
        self.objects.insert(id, obj);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&SpatialObject> {
        self.objects.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.objects.contains_key(id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.get_index_of(id)
    }

    pub fn objects(&self) -> impl ExactSizeIterator<Item = &SpatialObject> {
        self.objects.values()
    }

    pub fn ids(&self) -> Vec<String> {
        self.objects.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn relations(&self) -> &[SpatialRelation] {
        &self.relations
    }

    pub fn deduced_categories(&self) -> &BTreeSet<Category> {
        &self.deduced
    }

    pub fn is_deduced(&self, category: Category) -> bool {
        self.deduced.contains(&category)
    }

    /// Drops all relations, e.g. after the settings changed.
    pub fn invalidate_relations(&mut self) {
        self.relations.clear();
        self.deduced.clear();
    }

    /// Replaces the relations of `category` with a freshly computed set.
    pub(crate) fn store_category(&mut self, category: Category, fresh: Vec<SpatialRelation>) {
        self.relations.retain(|r| r.category() != Some(category));
        self.relations.extend(fresh);
        let order = |id: &str| self.objects.get_index_of(id).unwrap_or(usize::MAX);
        let mut keyed: Vec<_> = std::mem::take(&mut self.relations)
            .into_iter()
            .map(|r| ((order(&r.subject), order(&r.object)), r))
            .collect();
        keyed.sort_by(|(ka, a), (kb, b)| ka.cmp(kb).then_with(|| a.predicate.cmp(&b.predicate)));
        self.relations = keyed.into_iter().map(|(_, r)| r).collect();
        self.deduced.insert(category);
    }
}
