//! Training, validation and test sets.

pub mod activation;
pub mod corpus;
pub mod norm;
pub mod splits;
pub mod store;
pub mod synth;

pub use corpus::{synthetic_corpus, CorpusParams, CORPUS_TARGET};
pub use activation::{extract_activations, sample_non_activation, Activation, ActivationParams};
pub use norm::{compute_norm_stats, preprocess_input, scale_target, unscale_output, NormStats};
pub use splits::{
    build_splits, AugmentParams, BuildParams, Dataset, DatasetInfo, HouseRecording, Sample, SplitCounts, SplitKind,
    TimeRange,
};
pub use synth::{synthesize_aggregate, SynthesisConfig, SyntheticWindow};
pub use store::{DatasetManifest, MANIFEST_FILE};
