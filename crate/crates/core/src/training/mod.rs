//! Optimizer-grid training with best-on-validation checkpoints and model
//! selection by validation AUC.

pub mod run;
pub mod select;
pub mod variant;

pub use run::{
    train_run, train_run_observed, training_samples, EpochLog, RunConfig, RunResult, RunStatus, TrainingSet,
    DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS,
};
pub use select::{
    append_ledger, best_grid_point, grid_search, pick_grid_result, train_grid, read_ledger, run_configs, select_best_model, write_loss_curves,
    GridParams, GridResult, RunRecord, Selection, SelectionEntry, SelectionTable, DEGENERATE_AUC,
};
pub use variant::{default_grid, ModelVariant, GRID_LEARNING_RATES};
