//! Independent geometric oracles and seeded scene generators shared by the
//! integration tests. Nothing here calls into the library's geometry code.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spatial_reasoner::model::{NearbySchema, SectorSchema};
use spatial_reasoner::{AdjustmentSettings, SpatialObject};

/// Decisions closer than this to a threshold are treated as ambiguous.
pub const TOL: f64 = 1e-3;
pub const MC_SAMPLES: usize = 100_000;

/// Three-valued truth: `None` is "too close to call".
pub type Tri = Option<bool>;

pub fn and(a: Tri, b: Tri) -> Tri {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

pub fn or(a: Tri, b: Tri) -> Tri {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

pub fn not(a: Tri) -> Tri {
    a.map(|v| !v)
}

/// `value > 0`, ambiguous when within `TOL` of zero.
pub fn positive(value: f64) -> Tri {
    if value.abs() < TOL {
        None
    } else {
        Some(value > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl P {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dist(self, o: P) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

/// World directions of the local +X and +Z axes as (x, z) pairs.
fn axes(o: &SpatialObject) -> ((f64, f64), (f64, f64)) {
    let (s, c) = (o.angle.sin(), o.angle.cos());
    ((c, -s), (s, c))
}

fn half(o: &SpatialObject) -> [f64; 3] {
    [o.w / 2.0, o.h / 2.0, o.d / 2.0]
}

pub fn center(o: &SpatialObject) -> P {
    P::new(o.x, o.y + o.h / 2.0, o.z)
}

/// Local coordinates relative to the box center.
pub fn to_local(o: &SpatialObject, q: P) -> [f64; 3] {
    let (ux, uz) = axes(o);
    let (dx, dz) = (q.x - o.x, q.z - o.z);
    [dx * ux.0 + dz * ux.1, q.y - o.y - o.h / 2.0, dx * uz.0 + dz * uz.1]
}

pub fn to_world(o: &SpatialObject, l: [f64; 3]) -> P {
    let (ux, uz) = axes(o);
    P::new(o.x + l[0] * ux.0 + l[2] * uz.0, o.y + o.h / 2.0 + l[1], o.z + l[0] * ux.1 + l[2] * uz.1)
}

/// Signed distance from `q` to the box surface (negative inside).
pub fn sdf(o: &SpatialObject, q: P) -> f64 {
    let l = to_local(o, q);
    let h = half(o);
    let d: Vec<f64> = (0..3).map(|i| l[i].abs() - h[i]).collect();
    let outside = d.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
    let inside = d.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(0.0);
    outside + inside
}

pub fn project(o: &SpatialObject, q: P) -> P {
    let l = to_local(o, q);
    let h = half(o);
    to_world(o, [l[0].clamp(-h[0], h[0]), l[1].clamp(-h[1], h[1]), l[2].clamp(-h[2], h[2])])
}

pub fn box_corners(o: &SpatialObject) -> Vec<P> {
    let h = half(o);
    let mut out = Vec::with_capacity(8);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                out.push(to_world(o, [sx * h[0], sy * h[1], sz * h[2]]));
            }
        }
    }
    out
}

fn sub(a: P, b: P) -> [f64; 3] {
    [a.x - b.x, a.y - b.y, a.z - b.z]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn world_axes(o: &SpatialObject) -> [[f64; 3]; 3] {
    let (ux, uz) = axes(o);
    [[ux.0, 0.0, ux.1], [0.0, 1.0, 0.0], [uz.0, 0.0, uz.1]]
}

/// Largest gap between the projections of the two boxes over the 15
/// separating-axis candidates in 3D; negative means overlap on every axis.
pub fn sat_separation(a: &SpatialObject, b: &SpatialObject) -> f64 {
    let mut candidates: Vec<[f64; 3]> = Vec::new();
    let (aa, ba) = (world_axes(a), world_axes(b));
    candidates.extend(aa);
    candidates.extend(ba);
    for x in aa {
        for y in ba {
            candidates.push(cross(x, y));
        }
    }
    let (ca, cb) = (box_corners(a), box_corners(b));
    let mut best = f64::NEG_INFINITY;
    for axis in candidates {
        let n = dot(axis, axis).sqrt();
        if n < 1e-6 {
            continue;
        }
        let unit = [axis[0] / n, axis[1] / n, axis[2] / n];
        let range = |cs: &[P]| {
            cs.iter().map(|c| dot([c.x, c.y, c.z], unit)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let ((alo, ahi), (blo, bhi)) = (range(&ca), range(&cb));
        best = best.max((blo - ahi).max(alo - bhi));
    }
    best
}

/// Distance between segments `p1-q1` and `p2-q2`.
fn segment_distance(p1: P, q1: P, p2: P, q2: P) -> f64 {
    let (d1, d2, r) = (sub(q1, p1), sub(q2, p2), sub(p1, p2));
    let (a, e, f) = (dot(d1, d1), dot(d2, d2), dot(d2, r));
    let c = dot(d1, r);
    let b = dot(d1, d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-18 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let c1 = [p1.x + d1[0] * s, p1.y + d1[1] * s, p1.z + d1[2] * s];
    let c2 = [p2.x + d2[0] * t, p2.y + d2[1] * t, p2.z + d2[2] * t];
    dot(
        [c1[0] - c2[0], c1[1] - c2[1], c1[2] - c2[2]],
        [c1[0] - c2[0], c1[1] - c2[1], c1[2] - c2[2]],
    )
    .sqrt()
}

fn edges(o: &SpatialObject) -> Vec<(P, P)> {
    let c = box_corners(o);
    let mut out = Vec::with_capacity(12);
    for i in 0..8 {
        for bit in [1, 2, 4] {
            if i & bit == 0 {
                out.push((c[i], c[i | bit]));
            }
        }
    }
    out
}

/// Exact minimum distance between two boxes: zero when they overlap,
/// otherwise the closest vertex-box or edge-edge pair.
pub fn box_distance(a: &SpatialObject, b: &SpatialObject) -> f64 {
    if sat_separation(a, b) <= 0.0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for c in box_corners(a) {
        best = best.min(sdf(b, c).max(0.0));
    }
    for c in box_corners(b) {
        best = best.min(sdf(a, c).max(0.0));
    }
    for (p1, q1) in edges(a) {
        for (p2, q2) in edges(b) {
            best = best.min(segment_distance(p1, q1, p2, q2));
        }
    }
    best
}

fn flattened(o: &SpatialObject) -> SpatialObject {
    let mut f = o.clone();
    f.y = 0.0;
    f.h = 1.0;
    f
}

fn shrunk_aabb(o: &SpatialObject, shrink: f64) -> ([f64; 3], [f64; 3]) {
    let mut s = o.clone();
    s.w = (s.w - 2.0 * shrink).max(0.0);
    s.d = (s.d - 2.0 * shrink).max(0.0);
    s.y += shrink;
    s.h = (s.h - 2.0 * shrink).max(0.0);
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in box_corners(&s) {
        for (i, v) in [c.x, c.y, c.z].into_iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    (lo, hi)
}

/// Monte-Carlo search for a point lying deeper than `shrink` inside both boxes.
pub fn mc_overlap(a: &SpatialObject, b: &SpatialObject, shrink: f64, samples: usize, rng: &mut ChaCha8Rng) -> bool {
    let (alo, ahi) = shrunk_aabb(a, shrink);
    let (blo, bhi) = shrunk_aabb(b, shrink);
    let lo: Vec<f64> = (0..3).map(|i| alo[i].max(blo[i])).collect();
    let hi: Vec<f64> = (0..3).map(|i| ahi[i].min(bhi[i])).collect();
    if (0..3).any(|i| lo[i] >= hi[i]) {
        return false;
    }
    (0..samples).any(|_| {
        let q = P::new(rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1]), rng.gen_range(lo[2]..hi[2]));
        sdf(a, q) < -shrink && sdf(b, q) < -shrink
    })
}

/// Volumetric overlap: separated beyond `TOL`, overlapping deeper than `TOL`
/// on every axis, or a Monte-Carlo witness point.
pub fn intersects(a: &SpatialObject, b: &SpatialObject, rng: &mut ChaCha8Rng) -> Tri {
    let separation = sat_separation(a, b);
    if separation > TOL {
        Some(false)
    } else if separation < -TOL || mc_overlap(a, b, TOL, MC_SAMPLES, rng) {
        Some(true)
    } else {
        None
    }
}

fn footprint_overlap(a: &SpatialObject, b: &SpatialObject, rng: &mut ChaCha8Rng) -> Tri {
    intersects(&flattened(a), &flattened(b), rng)
}

/// Every corner of `inner` lies inside `outer` (convexity makes corners sufficient).
pub fn inside(inner: &SpatialObject, outer: &SpatialObject) -> Tri {
    let worst = box_corners(inner).into_iter().map(|c| sdf(outer, c)).fold(f64::NEG_INFINITY, f64::max);
    positive(-worst)
}

/// `s` sticks out of `o` on both sides of one of o's axes.
fn spans_through(s: &SpatialObject, o: &SpatialObject) -> Tri {
    let h = half(o);
    let mut best = f64::NEG_INFINITY;
    for i in 0..3 {
        let vals: Vec<f64> = box_corners(s).into_iter().map(|c| to_local(o, c)[i]).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best = best.max((-h[i] - lo).min(hi - h[i]));
    }
    positive(best)
}

fn vertical_overlap(a: &SpatialObject, b: &SpatialObject) -> f64 {
    (a.y + a.h).min(b.y + b.h) - a.y.max(b.y)
}

/// Quarter-turn alignment plus a shared vertical band and a shared strip
/// along one horizontal axis of `frame`.
fn lateral_contact(frame: &SpatialObject, other: &SpatialObject, settings: &AdjustmentSettings) -> Tri {
    let r = (frame.angle - other.angle).rem_euclid(FRAC_PI_2);
    let deviation = r.min(FRAC_PI_2 - r);
    let aligned = positive(settings.max_angle - deviation);
    let h = half(frame);
    let mut strip = Some(false);
    for i in [0, 2] {
        let vals: Vec<f64> = box_corners(other).into_iter().map(|c| to_local(frame, c)[i]).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        strip = or(strip, positive(hi.min(h[i]) - lo.max(-h[i])));
    }
    and(and(aligned, positive(vertical_overlap(frame, other))), strip)
}

fn radius(o: &SpatialObject) -> f64 {
    0.5 * (o.w * o.w + o.h * o.h + o.d * o.d).sqrt()
}

pub fn nearby_threshold(a: &SpatialObject, b: &SpatialObject, settings: &AdjustmentSettings) -> f64 {
    let sum = radius(a) + radius(b);
    match settings.nearby_schema {
        NearbySchema::Fixed => settings.nearby_factor,
        NearbySchema::Dimension => settings.nearby_factor * sum,
        NearbySchema::Limit => (2.0 * sum).min(settings.nearby_factor),
    }
}

/// Sector of `q` around `reference` as (front, side, vertical) signs.
/// Outer `None` means ambiguous, inner `None` means out of reach.
pub fn sector_of(reference: &SpatialObject, q: P, settings: &AdjustmentSettings) -> Option<Option<[i8; 3]>> {
    let l = to_local(reference, q);
    let h = half(reference);
    let reach = |i: usize| match settings.sector_schema {
        SectorSchema::Fixed => settings.sector_factor,
        SectorSchema::Dimension => settings.sector_factor * 2.0 * h[i],
        SectorSchema::Nearby => unimplemented!("oracle covers fixed and dimension sectors"),
    };
    let mut signs = [0i8; 3];
    for i in 0..3 {
        let r = reach(i);
        let v = l[i];
        if [-h[i] - r, -h[i], h[i], h[i] + r].iter().any(|b| (v - b).abs() < TOL) {
            return None;
        }
        if v.abs() > h[i] + r {
            return Some(None);
        }
        signs[i] = if v < -h[i] { -1 } else if v > h[i] { 1 } else { 0 };
    }
    // local axes are (x = side, y = vertical, z = front)
    Some(Some([signs[2], signs[0], signs[1]]))
}

fn sector_is(reference: &SpatialObject, q: P, settings: &AdjustmentSettings, code: [i8; 3]) -> Tri {
    sector_of(reference, q, settings).map(|s| s == Some(code))
}

/// Oracle truth values for the proximity, adjacency, connectivity and
/// assembly predicates of the ordered pair (s, o).
pub fn oracle_predicates(
    s: &SpatialObject,
    o: &SpatialObject,
    settings: &AdjustmentSettings,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<&'static str, Tri> {
    let gap = settings.max_gap;
    let dist = box_distance(s, o);
    let ints = intersects(s, o, rng);
    let ins = inside(s, o);
    let cont = inside(o, s);
    let spans = spans_through(s, o);
    let disjoint = and(not(ints), and(not(ins), not(cont)));
    let partial = and(ints, and(not(ins), not(cont)));
    let within_gap = positive(gap - dist);
    let touching = and(disjoint, within_gap);
    let face = or(footprint_overlap(s, o, rng), or(lateral_contact(o, s, settings), lateral_contact(s, o, settings)));
    let meeting = and(touching, face);

    let (cs, co) = (center(s), center(o));
    let cd = cs.dist(co);
    let within = positive(nearby_threshold(s, o, settings) - cd);
    let nested = or(positive(-sdf(o, cs)), positive(-sdf(s, co)));
    let near = and(within, not(nested));
    let adj = and(near, not(ints));
    let beside = and(adj, positive(vertical_overlap(s, o)));
    let ontop = and(and(sector_is(o, cs, settings, [0, 0, 1]), adj), within_gap);
    let beneath = and(and(sector_is(s, co, settings, [0, 0, 1]), adj), within_gap);

    let mut m = BTreeMap::new();
    m.insert("near", near);
    m.insert("far", not(within));
    for (name, code) in [
        ("leftside", [0, -1, 0]),
        ("rightside", [0, 1, 0]),
        ("frontside", [1, 0, 0]),
        ("backside", [-1, 0, 0]),
        ("upperside", [0, 0, 1]),
        ("lowerside", [0, 0, -1]),
    ] {
        m.insert(name, and(adj, sector_is(o, cs, settings, code)));
    }
    m.insert("beside", beside);
    m.insert("ontop", ontop);
    m.insert("beneath", beneath);
    m.insert("on", ontop);
    m.insert("at", and(beside, meeting));
    m.insert("by", touching);
    m.insert("in", ins);
    m.insert("disjoint", disjoint);
    m.insert("inside", ins);
    m.insert("containing", cont);
    m.insert("overlapping", and(partial, not(spans)));
    m.insert("crossing", and(partial, spans));
    m.insert("touching", touching);
    m.insert("meeting", meeting);
    m
}

pub fn random_box(rng: &mut ChaCha8Rng, id: &str) -> SpatialObject {
    SpatialObject::new(id)
        .sized(rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0))
        .rotated(rng.gen_range(-PI..PI))
}

/// Moves `o` along the horizontal unit direction `(ux, uz)` until its
/// distance to `s` equals `gap`.
fn place_at_gap(s: &SpatialObject, o: &mut SpatialObject, ux: f64, uz: f64, gap: f64) {
    let (x0, z0) = (o.x, o.z);
    let (mut lo, mut hi) = (0.0, 20.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        o.x = x0 + ux * mid;
        o.z = z0 + uz * mid;
        if box_distance(s, o) < gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    o.x = x0 + ux * hi;
    o.z = z0 + uz * hi;
}

/// Two-object scene number `i`: a mix of free placements, near-contacts,
/// stacks, nested boxes and long boxes crossing the subject.
pub fn two_object_scene(rng: &mut ChaCha8Rng, i: usize) -> (SpatialObject, SpatialObject) {
    let mut s = random_box(rng, "s").at(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut o = random_box(rng, "o");
    match i % 10 {
        0..=3 => {
            o.x = s.x + rng.gen_range(-4.0..4.0);
            o.y = s.y + rng.gen_range(-2.5..2.5);
            o.z = s.z + rng.gen_range(-4.0..4.0);
        }
        4..=6 => {
            if rng.gen_bool(0.5) {
                o.angle = s.angle + FRAC_PI_2 * rng.gen_range(0..4) as f64 + rng.gen_range(-0.15..0.15);
            }
            o.x = s.x;
            o.z = s.z;
            o.y = s.y + rng.gen_range(-0.8..0.8) * s.h.min(o.h) + (s.h - o.h) / 2.0;
            let t = rng.gen_range(-PI..PI);
            place_at_gap(&s, &mut o, t.cos(), t.sin(), rng.gen_range(0.0..0.04));
        }
        7 => {
            o.x = s.x + rng.gen_range(-0.5..0.5);
            o.z = s.z + rng.gen_range(-0.5..0.5);
            o.y = s.y + s.h + rng.gen_range(0.0..0.04);
            if rng.gen_bool(0.5) {
                std::mem::swap(&mut s, &mut o);
                std::mem::swap(&mut s.id, &mut o.id);
            }
        }
        8 => {
            let f = rng.gen_range(0.2..0.9);
            o.w = (s.w * f).max(0.1);
            o.h = (s.h * f).max(0.1);
            o.d = (s.d * f).max(0.1);
            o.angle = s.angle + rng.gen_range(-0.3..0.3);
            o.x = s.x + rng.gen_range(-0.2..0.2) * s.w;
            o.z = s.z + rng.gen_range(-0.2..0.2) * s.d;
            o.y = s.y + (s.h - o.h) / 2.0 + rng.gen_range(-0.2..0.2) * s.h;
            if rng.gen_bool(0.5) {
                std::mem::swap(&mut s, &mut o);
                std::mem::swap(&mut s.id, &mut o.id);
            }
        }
        _ => {
            o.w = 3.0;
            o.h = rng.gen_range(0.1..0.5);
            o.d = rng.gen_range(0.1..0.5);
            o.x = s.x + rng.gen_range(-0.3..0.3);
            o.z = s.z + rng.gen_range(-0.3..0.3);
            o.y = s.y + rng.gen_range(0.0..s.h);
        }
    }
    (s, o)
}

/// Scene of `n` boxes scattered in a 6 m cube, first one flagged as observer.
pub fn random_scene(rng: &mut ChaCha8Rng, n: usize) -> Vec<SpatialObject> {
    (0..n)
        .map(|k| {
            let mut b = random_box(rng, &format!("b{k}")).at(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.0..2.0),
                rng.gen_range(-3.0..3.0),
            );
            b.observer = k == 0;
            b
        })
        .collect()
}

/// Room with walls, furniture and an observer at the origin facing +Z.
pub fn room_scene(rng: &mut ChaCha8Rng) -> Vec<SpatialObject> {
    let mut objs = vec![{
        let mut u = SpatialObject::new("user").sized(0.5, 1.8, 0.3).typed("person");
        u.observer = true;
        u
    }];
    let kinds = ["table", "chair", "sofa", "lamp", "plant", "shelf"];
    for kind in kinds {
        loop {
            let b = random_box(rng, kind).at(rng.gen_range(-4.0..4.0), 0.0, rng.gen_range(-4.0..4.0)).typed(kind);
            let b = {
                let mut b = b;
                b.w = b.w.min(2.0);
                b.d = b.d.min(2.0);
                b
            };
            if objs.iter().all(|o| box_distance(o, &b) > 0.3) {
                objs.push(b);
                break;
            }
        }
    }
    objs
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
