//! Locally linear kernels built from anchor-centered conformal maps.

mod candidates;
mod gram;
mod map;

pub use candidates::{candidate_stream, AnchorSource, CandidateSet, CandidateSpec, GammaGrid};
pub use gram::{combine_grams, combined_gram, feature_matrix, gram, GramBlock};
pub use map::{ConformalMap, Locality, MapFamily, MapScope};
