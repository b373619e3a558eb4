//! Relation deduction: evaluates every predicate category between ordered
//! pairs of objects and stores the resulting subject-predicate-object edges.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{
    self, center_distance, center_offset, classify_sector, contains, corners, footprint_overlap, intersects,
    local_frame_transform, min_distance, vertical_overlap, SectorLabel,
};
use crate::model::{AdjustmentSettings, FactBase, NearbySchema, SpatialObject, EPS, LIMIT_DIMENSION_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Proximity,
    Directionality,
    Adjacency,
    Orientation,
    Connectivity,
    Sectoriality,
    Assembly,
    Visibility,
    Comparability,
    Similarity,
    Geography,
}

/// Observer-free geometric categories bundled under `topology`.
pub const TOPOLOGY: [Category; 6] = [
    Category::Proximity,
    Category::Directionality,
    Category::Adjacency,
    Category::Sectoriality,
    Category::Assembly,
    Category::Orientation,
];

impl Category {
    pub const ALL: [Category; 11] = [
        Category::Proximity,
        Category::Directionality,
        Category::Adjacency,
        Category::Orientation,
        Category::Connectivity,
        Category::Sectoriality,
        Category::Assembly,
        Category::Visibility,
        Category::Comparability,
        Category::Similarity,
        Category::Geography,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Proximity => "proximity",
            Category::Directionality => "directionality",
            Category::Adjacency => "adjacency",
            Category::Orientation => "orientation",
            Category::Connectivity => "connectivity",
            Category::Sectoriality => "sectoriality",
            Category::Assembly => "assembly",
            Category::Visibility => "visibility",
            Category::Comparability => "comparability",
            Category::Similarity => "similarity",
            Category::Geography => "geography",
        }
    }

    /// Predicate names of the category. Sectoriality lists no fixed names;
    /// its predicates are the 27 sector codes.
    pub fn predicates(self) -> &'static [&'static str] {
        match self {
            Category::Proximity => &["near", "far"],
            Category::Directionality => &["left", "right", "ahead", "behind", "above", "below"],
            Category::Adjacency => &[
                "leftside", "rightside", "frontside", "backside", "beside", "upperside", "lowerside", "ontop",
                "beneath",
            ],
            Category::Orientation => &["aligned", "orthogonal", "opposite"],
            Category::Connectivity => &["on", "at", "by", "in"],
            Category::Sectoriality => &[],
            Category::Assembly => {
                &["disjoint", "inside", "containing", "overlapping", "crossing", "touching", "meeting"]
            }
            Category::Visibility => &["infront", "atrear", "seenleft", "seenright"],
            Category::Comparability => {
                &["shorter", "longer", "taller", "thinner", "wider", "smaller", "bigger", "fitting", "exceeding"]
            }
            Category::Similarity => &[
                "sameheight",
                "samewidth",
                "samedepth",
                "samelength",
                "sameperimeter",
                "samefront",
                "sameside",
                "samefootprint",
                "samesurface",
                "samevolume",
                "samecuboid",
                "congruent",
                "sameposition",
                "samecenter",
                "sameshape",
            ],
            Category::Geography => {
                &["north", "south", "east", "west", "northeast", "northwest", "southeast", "southwest"]
            }
        }
    }

    /// Parses a category token, expanding `topology`.
    pub fn parse_set(token: &str) -> Result<Vec<Category>> {
        if token.eq_ignore_ascii_case("topology") {
            return Ok(TOPOLOGY.to_vec());
        }
        Ok(vec![token.parse()?])
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

/// Resolves predicate aliases (`over`, `under`) to registry names.
pub fn canonical_predicate(name: &str) -> &str {
    match name {
        "over" => "above",
        "under" => "below",
        other => other,
    }
}

/// Category of a predicate name, or `None` when it is not in the registry.
pub fn category_of(predicate: &str) -> Option<Category> {
    let p = canonical_predicate(predicate);
    if let Some(c) = Category::ALL.into_iter().find(|c| c.predicates().contains(&p)) {
        return Some(c);
    }
    p.parse::<SectorLabel>().ok().map(|_| Category::Sectoriality)
}

pub fn is_predicate(name: &str) -> bool {
    category_of(name).is_some()
}

/// Directed edge `subject predicate object`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialRelation {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    /// Predicate-specific metric (distance or difference).
    pub delta: f64,
    /// Yaw of subject minus yaw of object, normalized to (-pi, pi].
    pub angle: f64,
}

impl SpatialRelation {
    pub fn category(&self) -> Option<Category> {
        category_of(&self.predicate)
    }
}

impl fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} (delta {:.3})", self.subject, self.predicate, self.object, self.delta)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Unsigned yaw difference in [0, pi], computed symmetrically.
pub fn yaw_difference(a: f64, b: f64) -> f64 {
    let r = (a - b).abs() % (2.0 * PI);
    if r > PI {
        2.0 * PI - r
    } else {
        r
    }
}

/// Distance below which two objects count as near.
pub fn nearby_radius(a: &SpatialObject, b: &SpatialObject, settings: &AdjustmentSettings) -> f64 {
    let radii = a.radius() + b.radius();
    match settings.nearby_schema {
        NearbySchema::Fixed => settings.nearby_factor,
        NearbySchema::Dimension => settings.nearby_factor * radii,
        NearbySchema::Limit => (LIMIT_DIMENSION_FACTOR * radii).min(settings.nearby_factor),
    }
}

/// Mutually exclusive characterization of how two boxes are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssemblyState {
    /// Disjoint and further apart than the max gap.
    Apart,
    /// Disjoint but within the max gap (touching or meeting).
    Contact,
    Overlapping,
    Crossing,
    /// Subject inside object.
    Inside,
    /// Subject containing object.
    Containing,
    /// Each box contains the other.
    Coincident,
}

fn point_inside(reference: &SpatialObject, p: geometry::Vec3) -> bool {
    let l = local_frame_transform(reference, p);
    l.lx.abs() <= reference.w / 2.0 + EPS
        && l.lz.abs() <= reference.d / 2.0 + EPS
        && l.ly >= -EPS
        && l.ly <= reference.h + EPS
}

/// Whether `s` sticks out of `o` on both sides of one of o's local axes.
fn spans_through(s: &SpatialObject, o: &SpatialObject) -> bool {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in corners(s) {
        let l = local_frame_transform(o, c);
        for (i, v) in [l.lx, l.ly, l.lz].into_iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    let bounds = [(-o.w / 2.0, o.w / 2.0), (0.0, o.h), (-o.d / 2.0, o.d / 2.0)];
    bounds.iter().enumerate().any(|(i, (blo, bhi))| lo[i] < blo - EPS && hi[i] > bhi + EPS)
}

/// Lateral face contact: yaw of `frame` within max angle of a multiple of
/// a quarter turn relative to `other`, boxes sharing a vertical band and a
/// strip along one horizontal axis of `frame`.
fn lateral_face_contact(frame: &SpatialObject, other: &SpatialObject, settings: &AdjustmentSettings) -> bool {
    let diff = yaw_difference(frame.angle, other.angle);
    let quarter = (diff / FRAC_PI_2).round() * FRAC_PI_2;
    if (diff - quarter).abs() >= settings.max_angle {
        return false;
    }
    if vertical_overlap(frame, other) <= EPS {
        return false;
    }
    let (mut lo_x, mut hi_x, mut lo_z, mut hi_z) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in corners(other) {
        let l = local_frame_transform(frame, c);
        lo_x = lo_x.min(l.lx);
        hi_x = hi_x.max(l.lx);
        lo_z = lo_z.min(l.lz);
        hi_z = hi_z.max(l.lz);
    }
    let ox = hi_x.min(frame.w / 2.0) - lo_x.max(-frame.w / 2.0);
    let oz = hi_z.min(frame.d / 2.0) - lo_z.max(-frame.d / 2.0);
    ox > EPS || oz > EPS
}

/// Geometry shared by all categories for one ordered pair.
struct PairFacts<'a> {
    s: &'a SpatialObject,
    o: &'a SpatialObject,
    intersects: bool,
    inside: bool,
    containing: bool,
    min_distance: f64,
    center_distance: f64,
    near: bool,
    far: bool,
    /// Sector of the subject's center in the object's frame.
    sector: Option<SectorLabel>,
    /// Sector of the object's center in the subject's frame.
    reverse_sector: Option<SectorLabel>,
    angle: f64,
}

impl<'a> PairFacts<'a> {
    fn new(s: &'a SpatialObject, o: &'a SpatialObject, settings: &AdjustmentSettings) -> Self {
        let intersects = intersects(s, o);
        let center_distance = center_distance(s, o);
        let radius = nearby_radius(s, o, settings);
        let within = center_distance < radius + EPS;
        let nested_center = point_inside(o, s.center()) || point_inside(s, o.center());
        Self {
            s,
            o,
            intersects,
            inside: contains(o, s),
            containing: contains(s, o),
            min_distance: min_distance(s, o),
            center_distance,
            near: within && !nested_center,
            far: !within,
            sector: classify_sector(o, s.center(), settings),
            reverse_sector: classify_sector(s, o.center(), settings),
            angle: normalize_angle(s.angle - o.angle),
        }
    }

    fn disjoint(&self) -> bool {
        !self.intersects && !self.inside && !self.containing
    }

    fn touching(&self, settings: &AdjustmentSettings) -> bool {
        self.disjoint() && self.min_distance < settings.max_gap + EPS
    }

    fn face_contact(&self, settings: &AdjustmentSettings) -> bool {
        footprint_overlap(self.s, self.o) > EPS
            || lateral_face_contact(self.o, self.s, settings)
            || lateral_face_contact(self.s, self.o, settings)
    }

    fn meeting(&self, settings: &AdjustmentSettings) -> bool {
        self.touching(settings) && self.face_contact(settings)
    }

    fn crossing(&self) -> bool {
        self.intersects && !self.inside && !self.containing && spans_through(self.s, self.o)
    }

    fn in_single_sector(&self, code: SectorLabel) -> bool {
        self.sector == Some(code)
    }

    fn adjacent(&self) -> bool {
        self.near && !self.intersects
    }

    fn ontop(&self, settings: &AdjustmentSettings) -> bool {
        self.in_single_sector(SectorLabel::new(0, 0, 1))
            && self.adjacent()
            && self.min_distance < settings.max_gap + EPS
    }

    /// `ontop` with subject and object swapped.
    fn ontop_reverse(&self, settings: &AdjustmentSettings) -> bool {
        self.reverse_sector == Some(SectorLabel::new(0, 0, 1))
            && self.adjacent()
            && self.min_distance < settings.max_gap + EPS
    }

    fn beside(&self) -> bool {
        self.adjacent() && vertical_overlap(self.s, self.o) > EPS
    }

    fn state(&self, settings: &AdjustmentSettings) -> AssemblyState {
        match (self.inside, self.containing) {
            (true, true) => AssemblyState::Coincident,
            (true, false) => AssemblyState::Inside,
            (false, true) => AssemblyState::Containing,
            _ if self.crossing() => AssemblyState::Crossing,
            _ if self.intersects => AssemblyState::Overlapping,
            _ if self.touching(settings) => AssemblyState::Contact,
            _ => AssemblyState::Apart,
        }
    }
}

pub fn assembly_state(s: &SpatialObject, o: &SpatialObject, settings: &AdjustmentSettings) -> AssemblyState {
    PairFacts::new(s, o, settings).state(settings)
}

struct Emitter<'a> {
    s: &'a str,
    o: &'a str,
    angle: f64,
    out: Vec<SpatialRelation>,
}

impl Emitter<'_> {
    fn emit(&mut self, cond: bool, predicate: &str, delta: f64) {
        if cond {
            self.out.push(SpatialRelation {
                subject: self.s.to_string(),
                predicate: predicate.to_string(),
                object: self.o.to_string(),
                delta,
                angle: self.angle,
            });
        }
    }
}

fn eval_category(
    pair: &PairFacts<'_>,
    category: Category,
    settings: &AdjustmentSettings,
    observer: Option<&SpatialObject>,
    em: &mut Emitter<'_>,
) -> Result<()> {
    let (s, o) = (pair.s, pair.o);
    let gap = settings.max_gap;
    match category {
        Category::Proximity => {
            em.emit(pair.near, "near", pair.center_distance);
            em.emit(pair.far, "far", pair.center_distance);
        }
        Category::Directionality => {
            let v = center_offset(o, s.center());
            let d = pair.center_distance;
            em.emit(v.x < 0.0, "left", d);
            em.emit(v.x > 0.0, "right", d);
            em.emit(v.z > 0.0, "ahead", d);
            em.emit(v.z < 0.0, "behind", d);
            em.emit(s.center().y > o.center().y, "above", d);
            em.emit(s.center().y < o.center().y, "below", d);
        }
        Category::Adjacency => {
            let adj = pair.adjacent();
            let d = pair.min_distance;
            for (code, name) in [
                (SectorLabel::new(0, -1, 0), "leftside"),
                (SectorLabel::new(0, 1, 0), "rightside"),
                (SectorLabel::new(1, 0, 0), "frontside"),
                (SectorLabel::new(-1, 0, 0), "backside"),
                (SectorLabel::new(0, 0, 1), "upperside"),
                (SectorLabel::new(0, 0, -1), "lowerside"),
            ] {
                em.emit(adj && pair.in_single_sector(code), name, d);
            }
            em.emit(pair.beside(), "beside", d);
            em.emit(pair.ontop(settings), "ontop", d);
            em.emit(pair.ontop_reverse(settings), "beneath", d);
        }
        Category::Orientation => {
            let diff = yaw_difference(s.angle, o.angle);
            let a = settings.max_angle;
            em.emit(diff < a, "aligned", diff);
            em.emit(PI - diff < a, "opposite", diff);
            em.emit((diff - FRAC_PI_2).abs() < a, "orthogonal", diff);
        }
        Category::Connectivity => {
            let d = pair.min_distance;
            em.emit(pair.ontop(settings), "on", d);
            em.emit(pair.beside() && pair.meeting(settings), "at", d);
            em.emit(pair.touching(settings), "by", d);
            em.emit(pair.inside, "in", d);
        }
        Category::Sectoriality => {
            if let Some(code) = pair.sector {
                em.emit(true, &code.code(), pair.center_distance);
            }
        }
        Category::Assembly => {
            let disjoint = pair.disjoint();
            let crossing = pair.crossing();
            em.emit(disjoint, "disjoint", pair.center_distance);
            em.emit(pair.inside, "inside", pair.center_distance);
            em.emit(pair.containing, "containing", pair.center_distance);
            em.emit(
                pair.intersects && !pair.inside && !pair.containing && !crossing,
                "overlapping",
                pair.center_distance,
            );
            em.emit(crossing, "crossing", pair.center_distance);
            em.emit(pair.touching(settings), "touching", pair.min_distance);
            em.emit(pair.meeting(settings), "meeting", pair.min_distance);
        }
        Category::Visibility => {
            let observer = observer.ok_or(Error::NoObserver)?;
            visibility(s, o, observer, settings, em);
        }
        Category::Comparability => {
            let (ls, lo) = (s.length(), o.length());
            em.emit(lo - ls > gap, "shorter", lo - ls);
            em.emit(ls - lo > gap, "longer", ls - lo);
            em.emit(s.h - o.h > gap, "taller", s.h - o.h);
            let (fs, fo) = (s.footprint(), o.footprint());
            em.emit(fo - fs > gap * gap, "thinner", fo - fs);
            em.emit(fs - fo > gap * gap, "wider", fs - fo);
            let (vs, vo) = (s.volume(), o.volume());
            em.emit(vo - vs > gap.powi(3), "smaller", vo - vs);
            em.emit(vs - vo > gap.powi(3), "bigger", vs - vo);
            let fits = fits_into(s, o);
            em.emit(fits, "fitting", vo - vs);
            em.emit(!fits, "exceeding", vs - vo);
        }
        Category::Similarity => {
            let g2 = gap * gap;
            let diffs = [
                ("sameheight", (s.h - o.h).abs(), gap),
                ("samewidth", (s.w - o.w).abs(), gap),
                ("samedepth", (s.d - o.d).abs(), gap),
                ("samelength", (s.length() - o.length()).abs(), gap),
                ("sameperimeter", (s.perimeter() - o.perimeter()).abs(), 4.0 * gap),
                ("samefront", (s.front_area() - o.front_area()).abs(), g2),
                ("sameside", (s.side_area() - o.side_area()).abs(), g2),
                ("samefootprint", (s.footprint() - o.footprint()).abs(), g2),
                ("samesurface", (s.surface() - o.surface()).abs(), 3.0 * g2),
                ("samevolume", (s.volume() - o.volume()).abs(), g2 * gap),
            ];
            for (name, diff, limit) in diffs {
                em.emit(diff < limit, name, diff);
            }
            let cuboid = (s.w - o.w).abs() < gap && (s.h - o.h).abs() < gap && (s.d - o.d).abs() < gap;
            let dims = (s.w - o.w).abs().max((s.h - o.h).abs()).max((s.d - o.d).abs());
            em.emit(cuboid, "samecuboid", dims);
            em.emit(cuboid && yaw_difference(s.angle, o.angle) < settings.max_angle, "congruent", dims);
            let pos = (s.base() - o.base()).norm();
            em.emit(pos < gap, "sameposition", pos);
            em.emit(pair.center_distance < gap, "samecenter", pair.center_distance);
            if let (Some(a), Some(b)) = (s.shape(), o.shape()) {
                em.emit(a == b, "sameshape", 0.0);
            }
        }
        Category::Geography => {
            let [nx, nz] = settings.north;
            let (vx, vz) = (s.x - o.x, s.z - o.z);
            let north = vx * nx + vz * nz;
            // east = north x up
            let east = vx * -nz + vz * nx;
            let d = (vx * vx + vz * vz).sqrt();
            let ns = if north > gap {
                Some("north")
            } else if north < -gap {
                Some("south")
            } else {
                None
            };
            let ew = if east > gap {
                Some("east")
            } else if east < -gap {
                Some("west")
            } else {
                None
            };
            match (ns, ew) {
                (Some(a), Some(b)) => em.emit(true, &format!("{a}{b}"), d),
                (Some(a), None) | (None, Some(a)) => em.emit(true, a, d),
                (None, None) => {}
            }
        }
    }
    Ok(())
}

/// Whether `s` fits into `o` in some axis-permuted orientation.
fn fits_into(s: &SpatialObject, o: &SpatialObject) -> bool {
    let mut a = [s.w, s.h, s.d];
    let mut b = [o.w, o.h, o.d];
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).all(|(x, y)| *x <= *y + EPS)
}

/// Bearing and horizontal range of `p` seen from the observer (positive bearing to the right).
pub fn observer_view(observer: &SpatialObject, p: geometry::Vec3) -> (f64, f64) {
    let v = center_offset(observer, p);
    (v.x.atan2(v.z), v.x.hypot(v.z))
}

fn visibility(
    s: &SpatialObject,
    o: &SpatialObject,
    observer: &SpatialObject,
    settings: &AdjustmentSettings,
    em: &mut Emitter<'_>,
) {
    if s.id == observer.id || o.id == observer.id {
        return;
    }
    let (bs, ds) = observer_view(observer, s.center());
    let (bo, dob) = observer_view(observer, o.center());
    if bs.abs() >= FRAC_PI_2 || bo.abs() >= FRAC_PI_2 {
        return;
    }
    let spread = (bs - bo).abs();
    em.emit(bs < bo, "seenleft", spread);
    em.emit(bs > bo, "seenright", spread);
    let aligned = spread < settings.max_angle;
    em.emit(aligned && ds < dob, "infront", dob - ds);
    em.emit(aligned && ds > dob, "atrear", ds - dob);
}

/// Relations of one category from `s` to `o`.
pub fn relations_between(
    s: &SpatialObject,
    o: &SpatialObject,
    category: Category,
    settings: &AdjustmentSettings,
    observer: Option<&SpatialObject>,
) -> Result<Vec<SpatialRelation>> {
    if s.id == o.id {
        return Ok(Vec::new());
    }
    let pair = PairFacts::new(s, o, settings);
    let mut em = Emitter { s: &s.id, o: &o.id, angle: pair.angle, out: Vec::new() };
    eval_category(&pair, category, settings, observer, &mut em)?;
    Ok(em.out)
}

/// Observer for visibility: the explicit id if given, else the single
/// object flagged as observer.
pub fn resolve_observer<'a>(fb: &'a FactBase, explicit: Option<&str>) -> Result<&'a SpatialObject> {
    if let Some(id) = explicit {
        return fb.get(id).ok_or_else(|| Error::UnknownObserver(id.to_string()));
    }
    let mut flagged = fb.objects().filter(|o| o.observer);
    match (flagged.next(), flagged.next()) {
        (Some(o), None) => Ok(o),
        _ => Err(Error::NoObserver),
    }
}

/// Computes the requested categories over all ordered pairs and replaces
/// their previous relations in the fact base.
pub fn deduce(
    fb: &mut FactBase,
    categories: &BTreeSet<Category>,
    settings: &AdjustmentSettings,
    observer: Option<&str>,
) -> Result<()> {
    if categories.is_empty() {
        return Ok(());
    }
    settings.validate()?;
    let observer = if categories.contains(&Category::Visibility) {
        Some(resolve_observer(fb, observer)?.clone())
    } else {
        None
    };
    let objects: Vec<&SpatialObject> = fb.objects().collect();
    let mut per_category: Vec<Vec<SpatialRelation>> = vec![Vec::new(); categories.len()];
    for s in &objects {
        for o in &objects {
            if s.id == o.id {
                continue;
            }
            let pair = PairFacts::new(s, o, settings);
            for (slot, &category) in categories.iter().enumerate() {
                let mut em = Emitter { s: &s.id, o: &o.id, angle: pair.angle, out: Vec::new() };
                eval_category(&pair, category, settings, observer.as_ref(), &mut em)?;
                per_category[slot].extend(em.out);
            }
        }
    }
    for (&category, fresh) in categories.iter().zip(per_category) {
        fb.store_category(category, fresh);
    }
    Ok(())
}
