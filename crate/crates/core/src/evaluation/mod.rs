//! Metrics, ROC analysis and the two evaluation procedures.

pub mod metrics;
pub mod model;
pub mod procedures;
pub mod report;
pub mod roc;

pub use metrics::{classification_metrics, regression_metrics, ClassificationMetrics, RegressionMetrics};
pub use model::{window_score, WindowModel, WindowOutput};
pub use procedures::{
    activation_scores, evaluate_activations, evaluate_rolling, rolling_window_predict, RollingConfig,
};
pub use report::{merge_reports, write_auc_table_csv, write_summary_csv, write_overlay_csv, write_roc_csv, EvalReport, Procedure, ReportSummary};
pub use roc::{choose_threshold_max_f1, mann_whitney_auc, roc_auc, Roc, RocPoint};
