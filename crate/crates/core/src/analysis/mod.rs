//! Contour clustering, population metrics and batch-relative aggregation.

mod bootstrap;
mod cluster;
mod kmeans;
mod pca;
mod population;
mod silhouette;
mod table;
mod trajectory;

pub use bootstrap::{bootstrap_mean_ci, MeanCi, DEFAULT_RESAMPLES};
pub use cluster::{fit_cluster_model, ClusterModel, ClusterOptions, EMBED_DIM};
pub use kmeans::{kmeans, kmeans_plus_plus, kmeans_with, lloyd, nearest, KMeansFit, KMeansOptions};
pub use pca::{fit_pca, Pca};
pub use population::{
    cluster_entropy, neighbor_similarity, prevalence, relative_deviation, Observation,
    TopologyDeviation,
};
pub use silhouette::{k_seed, sampled_silhouette, select_k, silhouette, SelectK, SelectKOptions};
pub use table::{read_metrics_csv, write_metrics_csv};
pub use trajectory::{
    deviation_summary, metrics_table, population_pleasantness, prevalence_trajectory, trajectories,
    DeviationEntry, DeviationSummary, Metric, MetricsRecord, RunKey, Trajectory,
};
