//! Corpus features, correlation analysis and bootstrap intervals.

mod bootstrap;
mod correlation;
mod features;

pub use bootstrap::{
    bootstrap_bleu, bootstrap_test, bootstrap_train_xmi, bootstrap_xmi, builtin_xmi, percentile_positions,
    xmi_statistics, BootstrapResult, BuiltinScorer, DEFAULT_REPLICATES,
};
pub use correlation::{
    average_ranks, bonferroni_threshold, correlate_features, correlation_p_value, pearson, spearman, Correlation,
    CorrelationResult, CorrelationTable, DirectionFilter, SkippedFeature, ALPHA,
};
pub use features::{
    corpus_features, d_ttr, ttr, word_number_ratio, word_overlap_ratio, FeatureTable, COMPUTED_FEATURES,
};
