//! Entanglement entropy of image-classification target functions.
//!
//! A binary image on an `lx x ly` lattice is one `u64` word; a task is its set
//! of label-1 images. The normalized indicator of that set is treated as a
//! pure state, and the von Neumann entropy of its reduction to a pixel region
//! A measures how much the label depends jointly on A and its complement.

pub mod analysis;
pub mod entanglement;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod statespace;
pub mod taskfile;
pub mod tasks;

pub use analysis::{
    check_assumption1, coincidence_counts, cnn_channel_requirement, combine_verdicts, estimate_range,
    scan_cuts, ChannelRequirement, CutFamily, LinearFit, RangeEstimate, ScanResult, ScanRow, Verdict,
};
pub use entanglement::{
    check_property1, entanglement_entropy, entanglement_entropy_with, reduced_density_matrix,
    von_neumann_entropy, EntropyBase, EntropyOptions, EntropyReport, SchmidtSpectrum, SpectrumPath,
};
pub use error::{Error, Result};
pub use lattice::{Bipartition, CutSpec, ImageState, LatticeGeometry, PixelSet};
pub use statespace::TargetFunction;
pub use taskfile::{read_task, task_from_json, task_to_json, write_task};
pub use tasks::{EdgeLattice, Provenance, TaskSpec};
