//! Data-leakage checks and justification classification.

mod classify;
mod keywords;
mod probe;

pub use classify::{
    classification_window, compare_label_sets, first_peak, validate_classifier, Classification,
    JustificationClassifier, JustificationLabel, Task, TaskSummary, NONLINEAR_FIRST, WINDOW_LIMIT,
};
pub use keywords::{default_keywords, hit_totals, keyword_scan, parse_keyword_list, KeywordHit, KeywordMatcher};
pub use probe::{leakage_probe, leakage_questions, LeakageProbe, ProbeAnswer, ReviewSlot};
