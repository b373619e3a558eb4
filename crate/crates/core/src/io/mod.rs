//! Fact documents and log emitters.

mod facts;
mod mermaid;
mod scene;

pub use facts::{dump_facts, load_document, load_facts, FactDocument, ObjectRecord, FORMAT_VERSION};
pub use mermaid::export_mermaid;
pub use scene::export_scene;

use crate::model::FactBase;

/// Plain-text listing of `ids`, one object per line.
pub fn summary(fb: &FactBase, ids: &[String]) -> String {
    let mut out = format!("{} object(s)\n", ids.len());
    for id in ids {
        let Some(o) = fb.get(id) else { continue };
        out.push_str(&format!(
            "{} label='{}' type='{}' at ({:.3}, {:.3}, {:.3}) size {:.3} x {:.3} x {:.3} yaw {:.1}\n",
            o.id,
            o.label,
            o.kind,
            o.x,
            o.y,
            o.z,
            o.w,
            o.h,
            o.d,
            o.yaw_degrees()
        ));
    }
    out
}
