//! Geometry of yaw-oriented boxes.
//!
//! Every box is a footprint rectangle in the horizontal XZ plane extruded
//! along +Y, so 3D questions split into a 2D rectangle problem and a 1D
//! interval problem. Intersection uses the separating-axis test on the two
//! footprints (four candidate axes) plus vertical interval overlap; distance
//! combines the footprint polygon distance with the vertical gap.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AdjustmentSettings, NearbySchema, SectorSchema, SpatialObject, EPS, LIMIT_DIMENSION_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Point in the horizontal XZ plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct P2 {
    pub x: f64,
    pub z: f64,
}

impl P2 {
    fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
    fn sub(self, o: P2) -> P2 {
        P2::new(self.x - o.x, self.z - o.z)
    }
    fn dot(self, o: P2) -> f64 {
        self.x * o.x + self.z * o.z
    }
    fn cross(self, o: P2) -> f64 {
        self.x * o.z - self.z * o.x
    }
    fn dist(self, o: P2) -> f64 {
        let d = self.sub(o);
        d.dot(d).sqrt()
    }
}

/// Coordinates in a reference object's frame: yaw removed, origin at the
/// base center, +X right, +Y up, +Z front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPoint {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

/// Rotates a horizontal vector by `-angle` (world to local).
fn unrotate(angle: f64, dx: f64, dz: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (dx * c - dz * s, dx * s + dz * c)
}

/// Rotates a horizontal vector by `angle` (local to world).
fn rotate(angle: f64, lx: f64, lz: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (lx * c + lz * s, -lx * s + lz * c)
}

pub fn local_frame_transform(reference: &SpatialObject, p: Vec3) -> LocalPoint {
    let (lx, lz) = unrotate(reference.angle, p.x - reference.x, p.z - reference.z);
    LocalPoint { lx, ly: p.y - reference.y, lz }
}

pub fn world_from_local(reference: &SpatialObject, p: LocalPoint) -> Vec3 {
    let (dx, dz) = rotate(reference.angle, p.lx, p.lz);
    Vec3::new(reference.x + dx, reference.y + p.ly, reference.z + dz)
}

/// Offset of `p` from the reference's volumetric center, in its yaw frame.
pub fn center_offset(reference: &SpatialObject, p: Vec3) -> Vec3 {
    let c = reference.center();
    let (lx, lz) = unrotate(reference.angle, p.x - c.x, p.z - c.z);
    Vec3::new(lx, p.y - c.y, lz)
}

/// Local corner signs in output order: bottom ring then top ring, each
/// counter-clockwise seen from above.
const CORNER_SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

pub fn corners(obj: &SpatialObject) -> [Vec3; 8] {
    let mut out = [Vec3::default(); 8];
    for (level, ly) in [0.0, obj.h].into_iter().enumerate() {
        for (i, (sx, sz)) in CORNER_SIGNS.iter().enumerate() {
            out[level * 4 + i] = world_from_local(
                obj,
                LocalPoint { lx: sx * obj.w / 2.0, ly, lz: sz * obj.d / 2.0 },
            );
        }
    }
    out
}

pub(crate) fn footprint(obj: &SpatialObject) -> [P2; 4] {
    CORNER_SIGNS.map(|(sx, sz)| {
        let (dx, dz) = rotate(obj.angle, sx * obj.w / 2.0, sz * obj.d / 2.0);
        P2::new(obj.x + dx, obj.z + dz)
    })
}

fn axes(obj: &SpatialObject) -> [P2; 2] {
    let (s, c) = obj.angle.sin_cos();
    // local +X and +Z expressed in world XZ
    [P2::new(c, -s), P2::new(s, c)]
}

fn project(poly: &[P2; 4], axis: P2) -> (f64, f64) {
    poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = p.dot(axis);
        (lo.min(t), hi.max(t))
    })
}

/// Smallest interval overlap of the two footprints over the four separating
/// axes. Negative values mean a separating axis exists.
pub fn footprint_overlap(a: &SpatialObject, b: &SpatialObject) -> f64 {
    let (pa, pb) = (footprint(a), footprint(b));
    axes(a)
        .into_iter()
        .chain(axes(b))
        .map(|axis| {
            let (alo, ahi) = project(&pa, axis);
            let (blo, bhi) = project(&pb, axis);
            ahi.min(bhi) - alo.max(blo)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Overlap of the vertical spans; negative is the gap between them.
pub fn vertical_overlap(a: &SpatialObject, b: &SpatialObject) -> f64 {
    a.top().min(b.top()) - a.y.max(b.y)
}

/// Positive-volume overlap of two boxes.
pub fn intersects(a: &SpatialObject, b: &SpatialObject) -> bool {
    vertical_overlap(a, b) > EPS && footprint_overlap(a, b) > EPS
}

/// Whether every corner of `b` lies inside `a` (boundary inclusive).
pub fn contains(a: &SpatialObject, b: &SpatialObject) -> bool {
    corners(b).iter().all(|&p| {
        let l = local_frame_transform(a, p);
        l.lx.abs() <= a.w / 2.0 + EPS
            && l.lz.abs() <= a.d / 2.0 + EPS
            && l.ly >= -EPS
            && l.ly <= a.h + EPS
    })
}

fn point_segment_distance(p: P2, a: P2, b: P2) -> (f64, P2) {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = P2::new(a.x + ab.x * t, a.z + ab.z * t);
    (p.dist(q), q)
}

/// Every (point on one footprint, closest point on an edge of the other)
/// pair formed by a vertex of either rectangle.
fn vertex_edge_pairs(a: &[P2; 4], b: &[P2; 4]) -> Vec<(f64, P2, P2)> {
    let mut out = Vec::with_capacity(32);
    for (from, to) in [(a, b), (b, a)] {
        for &v in from {
            for i in 0..4 {
                let (dist, q) = point_segment_distance(v, to[i], to[(i + 1) % 4]);
                out.push((dist, v, q));
            }
        }
    }
    out
}

/// Horizontal distance between the footprints (zero when they touch or overlap).
pub fn footprint_distance(a: &SpatialObject, b: &SpatialObject) -> f64 {
    if footprint_overlap(a, b) >= -EPS {
        return 0.0;
    }
    vertex_edge_pairs(&footprint(a), &footprint(b))
        .into_iter()
        .map(|(d, _, _)| d)
        .fold(f64::INFINITY, f64::min)
}

/// Shortest distance between the two boxes; zero when they intersect.
pub fn min_distance(a: &SpatialObject, b: &SpatialObject) -> f64 {
    if intersects(a, b) {
        return 0.0;
    }
    let dxz = footprint_distance(a, b);
    let dy = (-vertical_overlap(a, b)).max(0.0);
    (dxz * dxz + dy * dy).sqrt()
}

pub fn center_distance(a: &SpatialObject, b: &SpatialObject) -> f64 {
    (a.center() - b.center()).norm()
}

/// Proximity reach of a single object: the radius within which other
/// objects count as nearby under the current schema.
pub fn nearby_reach(obj: &SpatialObject, settings: &AdjustmentSettings) -> f64 {
    match settings.nearby_schema {
        NearbySchema::Fixed => settings.nearby_factor,
        NearbySchema::Dimension => settings.nearby_factor * obj.radius(),
        NearbySchema::Limit => (LIMIT_DIMENSION_FACTOR * obj.radius()).min(settings.nearby_factor),
    }
}

/// One of the 27 sectors around a box: `i` for the inner sector, otherwise
/// up to three letters in the order a/b, l/r, o/u.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorLabel {
    /// -1 behind, 0 within, +1 ahead.
    pub front: i8,
    /// -1 left, 0 within, +1 right.
    pub side: i8,
    /// -1 under, 0 within, +1 over.
    pub vertical: i8,
}

impl SectorLabel {
    pub const INNER: SectorLabel = SectorLabel { front: 0, side: 0, vertical: 0 };

    pub fn new(front: i8, side: i8, vertical: i8) -> Self {
        Self { front: front.signum(), side: side.signum(), vertical: vertical.signum() }
    }

    pub fn divergency(self) -> usize {
        [self.front, self.side, self.vertical].iter().filter(|v| **v != 0).count()
    }

    pub fn all() -> impl Iterator<Item = SectorLabel> {
        (-1i8..=1).flat_map(|f| (-1i8..=1).flat_map(move |s| (-1i8..=1).map(move |v| SectorLabel::new(f, s, v))))
    }

    pub fn code(self) -> String {
        if self == Self::INNER {
            return "i".to_string();
        }
        let mut s = String::with_capacity(3);
        match self.front {
            1 => s.push('a'),
            -1 => s.push('b'),
            _ => {}
        }
        match self.side {
            -1 => s.push('l'),
            1 => s.push('r'),
            _ => {}
        }
        match self.vertical {
            1 => s.push('o'),
            -1 => s.push('u'),
            _ => {}
        }
        s
    }
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for SectorLabel {
    type Err = Error;

    fn from_str(code: &str) -> Result<Self> {
        let bad = || Error::UnknownPredicate(code.to_string());
        if code == "i" {
            return Ok(Self::INNER);
        }
        if code.is_empty() || code.len() > 3 {
            return Err(bad());
        }
        let mut label = Self::INNER;
        // letters must follow the canonical a/b, l/r, o/u order
        let mut stage = 0;
        for ch in code.chars() {
            let (slot_stage, value) = match ch {
                'a' => (1, 1),
                'b' => (1, -1),
                'l' => (2, -1),
                'r' => (2, 1),
                'o' => (3, 1),
                'u' => (3, -1),
                _ => return Err(bad()),
            };
            if slot_stage <= stage {
                return Err(bad());
            }
            stage = slot_stage;
            match slot_stage {
                1 => label.front = value,
                2 => label.side = value,
                _ => label.vertical = value,
            }
        }
        Ok(label)
    }
}

/// Sector reach beyond each face along local (x, y, z).
pub fn sector_reach(reference: &SpatialObject, settings: &AdjustmentSettings) -> (f64, f64, f64) {
    let f = settings.sector_factor;
    match settings.sector_schema {
        SectorSchema::Fixed => (f, f, f),
        SectorSchema::Dimension => (f * reference.w, f * reference.h, f * reference.d),
        SectorSchema::Nearby => {
            let r = nearby_reach(reference, settings);
            (r, r, r)
        }
    }
}

fn classify_axis(v: f64, lo: f64, hi: f64, reach: f64) -> Option<i8> {
    if v < lo - reach || v > hi + reach {
        None
    } else if v < lo {
        Some(-1)
    } else if v > hi {
        Some(1)
    } else {
        Some(0)
    }
}

/// Sector of point `p` relative to `reference`, or `None` when the point is
/// beyond the sector reach on any axis.
pub fn classify_sector(reference: &SpatialObject, p: Vec3, settings: &AdjustmentSettings) -> Option<SectorLabel> {
    let l = local_frame_transform(reference, p);
    let (rx, ry, rz) = sector_reach(reference, settings);
    let side = classify_axis(l.lx, -reference.w / 2.0, reference.w / 2.0, rx)?;
    let vertical = classify_axis(l.ly, 0.0, reference.h, ry)?;
    let front = classify_axis(l.lz, -reference.d / 2.0, reference.d / 2.0, rz)?;
    Some(SectorLabel { front, side, vertical })
}

/// Box geometry without identity, used for produced objects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub h: f64,
    pub d: f64,
    pub angle: f64,
}

impl Placement {
    pub fn apply(&self, obj: &mut SpatialObject) {
        obj.x = self.x;
        obj.y = self.y;
        obj.z = self.z;
        obj.w = self.w;
        obj.h = self.h;
        obj.d = self.d;
        obj.angle = self.angle;
    }
}

/// Region occupied by `sector` around `reference`, in the reference's frame.
pub fn sector_region(reference: &SpatialObject, sector: SectorLabel, settings: &AdjustmentSettings) -> Placement {
    let (rx, ry, rz) = sector_reach(reference, settings);
    let span = |sign: i8, lo: f64, hi: f64, reach: f64| match sign {
        -1 => (lo - reach, lo),
        1 => (hi, hi + reach),
        _ => (lo, hi),
    };
    let (x0, x1) = span(sector.side, -reference.w / 2.0, reference.w / 2.0, rx);
    let (y0, y1) = span(sector.vertical, 0.0, reference.h, ry);
    let (z0, z1) = span(sector.front, -reference.d / 2.0, reference.d / 2.0, rz);
    let base = world_from_local(reference, LocalPoint { lx: (x0 + x1) / 2.0, ly: y0, lz: (z0 + z1) / 2.0 });
    Placement { x: base.x, y: base.y, z: base.z, w: x1 - x0, h: y1 - y0, d: z1 - z0, angle: reference.angle }
}

/// Smallest world-aligned box covering every corner of every input.
pub fn enclosing_box<'a>(objs: impl IntoIterator<Item = &'a SpatialObject>) -> Result<Placement> {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut any = false;
    for obj in objs {
        any = true;
        for c in corners(obj) {
            lo = Vec3::new(lo.x.min(c.x), lo.y.min(c.y), lo.z.min(c.z));
            hi = Vec3::new(hi.x.max(c.x), hi.y.max(c.y), hi.z.max(c.z));
        }
    }
    if !any {
        return Err(Error::EmptyGroup);
    }
    Ok(Placement {
        x: (lo.x + hi.x) / 2.0,
        y: lo.y,
        z: (lo.z + hi.z) / 2.0,
        w: hi.x - lo.x,
        h: hi.y - lo.y,
        d: hi.z - lo.z,
        angle: 0.0,
    })
}

/// Sutherland-Hodgman clip of a convex polygon by a counter-clockwise convex clipper.
fn clip_convex(subject: &[P2], clipper: &[P2]) -> Vec<P2> {
    let mut out: Vec<P2> = subject.to_vec();
    let n = clipper.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clipper[i], clipper[(i + 1) % n]);
        let edge = b.sub(a);
        let inside = |p: P2| edge.cross(p.sub(a)) >= -EPS;
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (cin, pin) = (inside(cur), inside(prev));
            if cin != pin {
                let d = cur.sub(prev);
                let denom = edge.cross(d);
                if denom.abs() > f64::MIN_POSITIVE {
                    let t = edge.cross(a.sub(prev)) / denom;
                    out.push(P2::new(prev.x + d.x * t, prev.z + d.z * t));
                }
            }
            if cin {
                out.push(cur);
            }
        }
    }
    out
}

fn polygon_centroid(poly: &[P2]) -> P2 {
    let mut area2 = 0.0;
    let (mut cx, mut cz) = (0.0, 0.0);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let cr = p.cross(q);
        area2 += cr;
        cx += (p.x + q.x) * cr;
        cz += (p.z + q.z) * cr;
    }
    if area2.abs() > EPS * EPS {
        P2::new(cx / (3.0 * area2), cz / (3.0 * area2))
    } else {
        mean(poly)
    }
}

fn mean(points: &[P2]) -> P2 {
    let n = points.len().max(1) as f64;
    let (sx, sz) = points.iter().fold((0.0, 0.0), |(sx, sz), p| (sx + p.x, sz + p.z));
    P2::new(sx / n, sz / n)
}

/// Where two boxes within `max_gap` of each other touch.
///
/// Stacked boxes (overlapping footprints) get a thin slab over the footprint
/// intersection, placed on the lower box's top face. Side-by-side boxes get a
/// small marker centered on the closest features, standing on the lower of
/// the two bases. Returns `None` when the boxes are further apart.
pub fn contact_region(a: &SpatialObject, b: &SpatialObject, settings: &AdjustmentSettings) -> Option<Placement> {
    if min_distance(a, b) > settings.max_gap + EPS {
        return None;
    }
    let marker = 2.0 * settings.max_gap;
    let (pa, pb) = (footprint(a), footprint(b));
    if footprint_overlap(a, b) > EPS {
        let lower = if a.y <= b.y { a } else { b };
        let upper_base = if a.y <= b.y { b.y } else { a.y };
        let region = clip_convex(&pa, &pb);
        let c = polygon_centroid(&region);
        let (mut lo_x, mut hi_x, mut lo_z, mut hi_z) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &region {
            let (lx, lz) = unrotate(lower.angle, p.x - c.x, p.z - c.z);
            lo_x = lo_x.min(lx);
            hi_x = hi_x.max(lx);
            lo_z = lo_z.min(lz);
            hi_z = hi_z.max(lz);
        }
        // intersecting boxes: the shared volume starts at the higher base
        let y = if intersects(a, b) { upper_base } else { lower.top() };
        return Some(Placement {
            x: c.x,
            y,
            z: c.z,
            w: (hi_x - lo_x).max(0.0),
            h: marker,
            d: (hi_z - lo_z).max(0.0),
            angle: lower.angle,
        });
    }
    let pairs = vertex_edge_pairs(&pa, &pb);
    let best = pairs.iter().map(|(d, _, _)| *d).fold(f64::INFINITY, f64::min);
    let tol = EPS + best * 1e-9;
    let mut contacts: Vec<P2> = Vec::new();
    for (d, p, q) in pairs {
        if d <= best + tol {
            let mid = P2::new((p.x + q.x) / 2.0, (p.z + q.z) / 2.0);
            if !contacts.iter().any(|c| c.dist(mid) <= 1e-7) {
                contacts.push(mid);
            }
        }
    }
    let c = mean(&contacts);
    Some(Placement { x: c.x, y: a.y.min(b.y), z: c.z, w: marker, h: marker, d: marker, angle: a.angle })
}
