//! Prediction scores, bootstrap comparisons, gap statistic and distance
//! diagnostics.

mod bootstrap;
mod cluster;
mod divergence;
mod metrics;
mod rank;

pub use bootstrap::{
    bootstrap_metrics, jackknife_bootstrap_ci, null_bootstrap, null_model_predictions, robustness_wins,
    BootstrapSummary, MAX_REDRAWS,
};
pub use cluster::{gap_statistic, kmeans, GapOptions, GapResult, KMeansResult};
pub use divergence::{kl_divergence_distances, DEFAULT_BINS};
pub use metrics::{score, Metric, MetricReport, PerMetric};
pub use rank::{kendall_tau_b, kendall_tau_distances};
