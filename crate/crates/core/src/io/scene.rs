//! Wavefront OBJ scene export.

use crate::geometry::corners;
use crate::model::SpatialObject;

// 1-based corner indices per face, counter-clockwise seen from outside.
const FACES: [[usize; 4]; 6] = [[1, 2, 3, 4], [5, 8, 7, 6], [4, 3, 7, 8], [1, 5, 6, 2], [2, 6, 7, 3], [1, 4, 8, 5]];

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') { c } else { '_' }).collect()
}

/// One `o` block of 8 vertices and 6 quads per object, in iteration order.
pub fn export_scene<'a>(objects: impl IntoIterator<Item = &'a SpatialObject>) -> String {
    let mut out = String::from("# spatial-reasoner scene\n");
    for (k, obj) in objects.into_iter().enumerate() {
        let name = if obj.label.is_empty() { sanitize(&obj.id) } else { format!("{}_{}", sanitize(&obj.id), sanitize(&obj.label)) };
        out.push_str(&format!("o {name}\n"));
        for c in corners(obj) {
            out.push_str(&format!("v {:.6} {:.6} {:.6}\n", c.x, c.y, c.z));
        }
        let base = 8 * k;
        for f in FACES {
            out.push_str(&format!("f {} {} {} {}\n", base + f[0], base + f[1], base + f[2], base + f[3]));
        }
    }
    out
}
