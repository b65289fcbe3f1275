//! Co-authorship, citation and author–paper networks derived from the
//! knowledge graph, with degree statistics and discrete power-law fits.

pub mod network;
pub mod powerlaw;

pub use network::{
    analyze, build_network, distribution_tsv, export_distribution, log_bins, report_table, DegreeStats, NetworkGraph,
    NetworkKind, NetworkReportRow,
};
pub use powerlaw::{estimate_power_law, fit_power_law, hurwitz_zeta, PowerLawFit, DEFAULT_REPLICATES, MIN_OBSERVATIONS};
