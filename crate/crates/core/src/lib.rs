//! Exact timeline extraction from TimeML-annotated documents.
//!
//! The pipeline partitions a TimeML graph into temporally connected
//! subgraphs, rewrites each one as point-algebra constraints over interval
//! start/end points, checks consistency (reporting inconsistent cycles for
//! manual correction), builds the minimum normal-form timeline of each
//! subgraph, flags ordering indeterminacy, and assembles the results into a
//! trunk-and-branch structure.

pub mod model;
pub mod parser;
pub mod pa;
pub mod partition;
pub mod consistency;
pub mod timeline;
pub mod oracle;
pub mod trunk_branch;
pub mod analysis;
