//! Blockmodeling of temporal co-authorship networks.
//!
//! The crate covers the full pipeline from raw publication records to
//! discipline-level statistics:
//!
//! * [`network`] — parse publication records and build per-period
//!   co-authorship networks.
//! * [`equivalence`] — structural-equivalence dissimilarities and
//!   agglomerative hierarchical clustering (indirect blockmodeling).
//! * [`blockmodel`] — direct blockmodeling of a multi-core /
//!   semi-periphery / periphery structure by relocation local search.
//! * [`stability`] — Rand/Wallace index family with newcomer/departure
//!   modifications and Monte-Carlo chance correction.
//! * [`transitions`] — core-to-core flow tables, merge/split detection and
//!   flow-diagram emission.
//! * [`analysis`] — discipline clustering (Ward + gap statistic), cluster
//!   summaries and OLS regression with diagnostics.

pub mod analysis;
pub mod blockmodel;
pub mod equivalence;
pub mod network;
pub mod stability;
pub mod transitions;

pub use blockmodel::{BlockmodelFit, ImageSpec, Partition, Role};
pub use network::{Network, PeriodSpec, PublicationRecord};
pub use stability::{StabilityReport, TemporalPair};
