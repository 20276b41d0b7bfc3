//! Aggregating scores from flat classifiers, each trained on its own subset
//! of labels, into a single root-to-terminal path through a class taxonomy.
//!
//! Two aggregators are provided: summing scores up the IS-A graph and
//! walking down while the children's score entropy stays low, or a Bayesian
//! network over class memberships with exact junction-tree inference.
//! Observation parameters for the latter come from labeled data or from EM.

pub mod aggregate;
pub mod decision;
pub mod estimation;
pub mod eval;
pub mod fixtures;
pub mod graphical;
pub mod heuristic;
pub mod io;
pub mod sheet;
pub mod synth;
pub mod taxonomy;

pub use decision::{Decision, EntropyForm, TerminationPolicy};
pub use graphical::{ObservationKind, ParamSet, PosteriorReport};
pub use heuristic::{aggregate_heuristic, propagate, PropagatedScores};
pub use sheet::ScoreSheet;
pub use taxonomy::{ClassId, LabelPath, Taxonomy, TaxonomyError};
