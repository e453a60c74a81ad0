//! Feature dependency and pitch subtype analysis for pitch-tracking data.
//!
//! Each numeric feature is first turned into categories by a
//! [possibly-gapped histogram](histogram). Pairwise dependence between the
//! categorized features is measured by the [mutual conditional
//! entropy](entropy), and the resulting matrices are organized by
//! [hierarchical clustering](hclust) and by coupled row and column
//! clustering ([`mechanics`]). The [`subtype`] module applies the same
//! machinery to individual pitches, and [`render`] writes the figures.
//!
//! The examples directory has one runnable program per capability:
//!
//! | example | shows |
//! |---|---|
//! | `ingest_csv` | CSV parsing with a column mapping, filters, save and load |
//! | `gapped_histogram` | bins, gaps and categories of a bimodal sample |
//! | `mce_matrix` | MCE of small tables and a 21-feature matrix |
//! | `hierarchical_clustering` | the four linkages, cuts and Newick output |
//! | `data_mechanics_planted` | recovery of a planted block matrix |
//! | `subtype_likelihood` | subtype extraction against baseline seasons |
//! | `render_reports` | heatmaps, likelihood plot and scatter export |
//! | `universality` | template scoring and systemic clustering |
//!
//! The `datamech` binary wraps the pipeline; see [`cli`].

pub mod cli;
pub mod entropy;
pub mod error;
pub mod hclust;
pub mod histogram;
pub mod ingest;
pub mod mechanics;
pub mod metrics;
pub mod render;
pub mod subtype;
pub mod synthetic;

pub use error::{Error, Result};
