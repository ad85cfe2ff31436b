//! Datasets on disk, run configuration and the synthetic cohort generator.

mod config;
mod epochfile;
mod manifest;
mod synth;

pub use config::{load_config, Ablation, RunConfig};
pub use epochfile::{
    checksum, decode_epochs, decode_labels, encode_epochs, encode_labels, read_epochs, read_labels,
    write_epochs, write_labels, EpochArray, EPOCH_MAGIC, FORMAT_VERSION, LABEL_MAGIC,
};
pub use manifest::{
    load_dataset, save_dataset, Dataset, DatasetManifest, SubjectData, SubjectEntry, MANIFEST_FORMAT,
    MANIFEST_VERSION,
};
pub use synth::{generate_synthetic, SynthSpec, DEFAULT_CLASS_FREQS};
