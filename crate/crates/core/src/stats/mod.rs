//! Cross-image statistics and model comparison.

mod boxplot;
mod ranks;
mod wilcoxon;

pub use boxplot::{
    boxplot_stats, mean, percentile, select_representative_samples, std_dev, BoxplotStat,
    BoxplotStats, P33,
};
pub use ranks::{average_ranks, descending_ranks, PairedScoreTable};
pub use wilcoxon::{
    signed_rank_null_counts, signed_rank_test, wilcoxon_signed_rank, Alternative, WilcoxonResult, ZeroMethod,
    EXACT_MAX_N,
};
