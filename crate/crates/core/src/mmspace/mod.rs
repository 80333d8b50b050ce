//! Discrete metric measure spaces.

mod build;
mod graph;
mod io;
mod measure;

pub use build::{build_annulus_grid, build_grid, build_masked_grid, build_rect_grid, Domain};
pub use graph::{Edge, MeasureGraph, Node, NodeSet};
pub use io::{read_graph, write_graph, write_node_values};
pub(crate) use measure::MinKey;
pub use measure::{ball, coarea_identity, distances_from, doubling_estimate, isoperimetric_ratio, perimeter, total_variation};
