//! Market-level measures and tests computed from run logs.

mod bias;
mod bubble;
mod category;
mod decomposition;
mod measures;
mod plot;
mod report;
mod robustness;
mod speculative;

pub use bias::{bias_fraction, bias_test, bias_test_per_agent, BiasVerdict};
pub use bubble::{bubble_shape, detect_bubble, detect_bubble_mean, find_peak, BubbleParams, BubbleShape};
pub use category::{categorize_run, half_stds, Category, CALM_STD, VOLATILE_STD};
pub use decomposition::{decompose, decompose_errors, ErrorDecomposition};
pub use measures::{compute_measures, MeasureSet};
pub use plot::{category_counts_csv, decomposition_csv, price_paths_csv, scatter_csv};
pub use report::{
    aggregate_reports, analyze_run, analyze_run_as, perfect_foresight_log, summary_csv, summary_table,
    AnalysisParams, CampaignSummary, RunReport, TABLE_COLUMNS,
};
pub use report::csv_field;
pub use robustness::{
    default_classifiers, robustness_grid, robustness_grid_with, Classifier, RobustnessGrid, DURATIONS,
    DURATION_MULTIPLES, MEAN_MULTIPLES,
};
pub use speculative::{growth_window_end, speculative_test, SpeculativeTest};
