//! Representation-quality metrics.

pub mod correlation;
pub mod encoding;
pub mod moments;
pub mod neighbor;
pub mod procrustes;
pub mod silhouette;

pub use correlation::{correlations, pearson, spearman, CorrelationReport};
pub use encoding::EncodingMatrix;
pub use moments::{cluster_moments, ClusterMoments};
pub use neighbor::{neighbor_loss, random_walk_loglik, NeighborLoss};
pub use procrustes::{encoding_distance, procrustes_distance};
pub use silhouette::{silhouette, silhouette_limited, silhouette_samples, SilhouetteResult, FULL_SILHOUETTE_LIMIT};
