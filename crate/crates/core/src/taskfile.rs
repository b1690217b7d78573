//! JSON task files.
//!
//! ```json
//! {
//!   "lx": 2, "ly": 4, "periodic": false,
//!   "label1": ["0", "33", ...],
//!   "meta": {
//!     "name": "loops-k2-periodic",
//!     "generator": "loops", "params": {...},
//!     "edge_lattice": {"k": 2, "periodic": true}
//!   }
//! }
//! ```
//!
//! Images are lowercase hex words without prefix (bit `i` is pixel `i`), in
//! ascending order. `meta` is optional on input. Output is byte-for-byte
//! reproducible for a given task.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{parse_hex_word, ImageState, LatticeGeometry};
use crate::tasks::{EdgeLattice, Provenance, TaskSpec};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    lx: usize,
    ly: usize,
    #[serde(default)]
    periodic: bool,
    label1: Vec<String>,
    #[serde(default)]
    meta: Meta,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Meta {
    #[serde(default)]
    name: String,
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_lattice: Option<EdgeLattice>,
}

pub fn task_to_json(task: &TaskSpec) -> String {
    let file = TaskFile {
        lx: task.geom.lx(),
        ly: task.geom.ly(),
        periodic: task.geom.periodic(),
        label1: task.label1().iter().map(|s| s.to_string()).collect(),
        meta: Meta {
            name: task.name.clone(),
            provenance: task.provenance.clone(),
            edge_lattice: task.edge_lattice,
        },
    };
    let mut out = serde_json::to_string_pretty(&file).expect("task serializes");
    out.push('\n');
    out
}

pub fn task_from_json(text: &str) -> Result<TaskSpec> {
    let file: TaskFile = serde_json::from_str(text).map_err(|e| Error::BadTaskFile(e.to_string()))?;
    let geom = LatticeGeometry::new(file.lx, file.ly, file.periodic)?;
    let label1 = file
        .label1
        .iter()
        .map(|h| {
            parse_hex_word(h)
                .map(ImageState)
                .ok_or_else(|| Error::BadTaskFile(format!("bad image word {h:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let task = TaskSpec::new(file.meta.name, geom, label1, file.meta.provenance)?;
    match file.meta.edge_lattice {
        Some(lat) => {
            let lat = EdgeLattice::new(lat.k, lat.periodic)?;
            if lat.geometry() != task.geom {
                return Err(Error::BadTaskFile(
                    "edge_lattice does not match the pixel geometry".into(),
                ));
            }
            Ok(task.with_edge_lattice(lat))
        }
        None => Ok(task),
    }
}

pub fn write_task(task: &TaskSpec, path: &Path) -> Result<()> {
    std::fs::write(path, task_to_json(task))
        .map_err(|e| Error::BadTaskFile(format!("{}: {e}", path.display())))
}

pub fn read_task(path: &Path) -> Result<TaskSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadTaskFile(format!("{}: {e}", path.display())))?;
    task_from_json(&text)
}
