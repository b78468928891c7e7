//! Orthogonal projections for dimension reduction, viewed through two
//! competing objectives: preserving total variance and preserving scaled
//! pairwise relative distances.
//!
//! The crate provides
//! - projector and Stiefel-frame types, Haar sampling on the Grassmannian and
//!   PCA projectors ([`grassmann`]),
//! - the empirical objectives `tvar(px)`, `M(p,x)`, `V(p,x)` and
//!   Johnson–Lindenstrauss checks ([`objectives`]),
//! - exact closed-form moments over Haar-random projectors ([`moments`]),
//! - finite candidate sets, covering radii and cubature tests ([`designs`]),
//! - heuristic projector selectors ([`select`]),
//! - augmented target losses with feature stacks and projections ([`atloss`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atloss;
pub mod designs;
pub mod error;
pub mod grassmann;
pub mod io;
pub mod moments;
pub mod objectives;
pub mod select;
pub mod stats;

pub use atloss::{AtLoss, AtLossSpec, BaseLoss, Batch, FeatureStack, FeatureTransform, ProjectorPolicy};
pub use designs::{CandidateSet, DesignSource};
pub use error::{Error, Result};
pub use grassmann::{
    frame_to_projector, frobenius_distance, haar_sample, pca_projector, project_affine, HaarSubspace, PointCloud,
    Projector, SeedStream, StiefelFrame, SubspaceProjection,
};
pub use moments::{closed_form_moments, correlation_lower_bound, lsq_fit, ClosedFormMoments, LsqFit};
pub use objectives::{summarize, total_variance, PairGeometry, ProjectionSummary};
pub use select::{select, Rule, SelectionResult};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the on-disk JSON/CSV formats written by this crate.
pub const FORMAT_VERSION: u32 = 1;
