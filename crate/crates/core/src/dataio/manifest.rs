//! Dataset manifests and whole-dataset load/save.
//!
//! ```text
//! format = eeg-manifest
//! version = 1
//! name = synth
//! sample_rate = 100
//! n_channels = 2
//! n_classes = 3
//! subject = s000 s000.eegb s000.eegl 60
//! subject = s001 s001.eegb - 60
//! ```
//!
//! File paths are relative to the manifest's directory; `-` marks a subject
//! without labels.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::epochfile::{read_epochs, read_labels, write_epochs, write_labels, EpochArray};
use crate::featkit::Epoch;
use crate::{Error, Result};

pub const MANIFEST_FORMAT: &str = "eeg-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectEntry {
    pub id: String,
    pub epoch_file: String,
    pub label_file: Option<String>,
    pub n_epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub sample_rate: f64,
    pub n_channels: usize,
    pub n_classes: usize,
    pub subjects: Vec<SubjectEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let fail = |why: String| Error::format(path, why);
        let mut format = None;
        let mut version = None;
        let mut name = None;
        let mut sample_rate = None;
        let mut n_channels = None;
        let mut n_classes = None;
        let mut subjects = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> { v.parse().map_err(|_| fail(format!("{key}: bad number `{v}`"))) };
            match key {
                "format" => format = Some(value.to_owned()),
                "version" => version = Some(num(value)? as u32),
                "name" => name = Some(value.to_owned()),
                "sample_rate" => sample_rate = Some(num(value)?),
                "n_channels" => n_channels = Some(num(value)? as usize),
                "n_classes" => n_classes = Some(num(value)? as usize),
                "subject" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 4 {
                        return Err(fail(format!("line {}: subject needs `id epochs labels count`", n + 1)));
                    }
                    subjects.push(SubjectEntry {
                        id: parts[0].to_owned(),
                        epoch_file: parts[1].to_owned(),
                        label_file: (parts[2] != "-").then(|| parts[2].to_owned()),
                        n_epochs: parts[3]
                            .parse()
                            .map_err(|_| fail(format!("subject {}: bad epoch count", parts[0])))?,
                    });
                }
                other => return Err(fail(format!("unknown manifest key `{other}`"))),
            }
        }
        if format.as_deref() != Some(MANIFEST_FORMAT) {
            return Err(fail("missing `format = eeg-manifest`".into()));
        }
        match version {
            Some(MANIFEST_VERSION) => {}
            Some(v) => return Err(fail(format!("unsupported manifest version {v}"))),
            None => return Err(fail("missing version".into())),
        }
        let mut seen = BTreeSet::new();
        for s in &subjects {
            if !seen.insert(s.id.as_str()) {
                return Err(fail(format!("duplicate subject id `{}`", s.id)));
            }
        }
        Ok(Self {
            name: name.unwrap_or_default(),
            sample_rate: sample_rate.ok_or_else(|| fail("missing sample_rate".into()))?,
            n_channels: n_channels.ok_or_else(|| fail("missing n_channels".into()))?,
            n_classes: n_classes.ok_or_else(|| fail("missing n_classes".into()))?,
            subjects,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "format = {MANIFEST_FORMAT}\nversion = {MANIFEST_VERSION}\nname = {}\nsample_rate = {}\nn_channels = {}\nn_classes = {}\n",
            self.name, self.sample_rate, self.n_channels, self.n_classes
        );
        for s in &self.subjects {
            out.push_str(&format!(
                "subject = {} {} {} {}\n",
                s.id,
                s.epoch_file,
                s.label_file.as_deref().unwrap_or("-"),
                s.n_epochs
            ));
        }
        out
    }
}

/// A subject's epochs, with labels when the dataset provides them.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectData {
    pub id: String,
    pub epochs: Vec<Epoch>,
    pub labels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub sample_rate: f64,
    pub n_channels: usize,
    pub n_classes: usize,
    pub subjects: Vec<SubjectData>,
}

fn to_array(epochs: &[Epoch]) -> EpochArray {
    epochs
        .iter()
        .map(|e| e.channels().iter().map(|c| c.iter().map(|v| *v as f32).collect()).collect())
        .collect()
}

/// Loads every subject listed in the manifest at `path`.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = DatasetManifest::parse(&text, path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut subjects = Vec::with_capacity(manifest.subjects.len());
    for entry in &manifest.subjects {
        let bad = |why: String| Error::subject(&entry.id, why);
        let raw = read_epochs(&base.join(&entry.epoch_file)).map_err(|e| bad(e.to_string()))?;
        if raw.len() != entry.n_epochs {
            return Err(bad(format!(
                "manifest lists {} epochs, file holds {}",
                entry.n_epochs,
                raw.len()
            )));
        }
        let epochs = raw
            .into_iter()
            .map(|e| {
                if e.len() != manifest.n_channels {
                    return Err(bad(format!("expected {} channels, found {}", manifest.n_channels, e.len())));
                }
                let chans = e.into_iter().map(|c| c.into_iter().map(f64::from).collect()).collect();
                Epoch::new(chans, manifest.sample_rate).map_err(|e| bad(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = match &entry.label_file {
            None => None,
            Some(f) => {
                let l = read_labels(&base.join(f)).map_err(|e| bad(e.to_string()))?;
                if l.len() != epochs.len() {
                    return Err(bad(format!("{} labels for {} epochs", l.len(), epochs.len())));
                }
                if let Some(bad_label) = l.iter().find(|&&v| v >= manifest.n_classes) {
                    return Err(bad(format!("label {bad_label} out of range")));
                }
                Some(l)
            }
        };
        subjects.push(SubjectData {
            id: entry.id.clone(),
            epochs,
            labels,
        });
    }
    Ok(Dataset {
        name: manifest.name,
        sample_rate: manifest.sample_rate,
        n_channels: manifest.n_channels,
        n_classes: manifest.n_classes,
        subjects,
    })
}

/// Writes `<id>.eegb`, `<id>.eegl` and `manifest.txt` into `dir`; returns
/// the manifest path. Samples are stored as `f32`.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for s in &dataset.subjects {
        let epoch_file = format!("{}.eegb", s.id);
        write_epochs(&dir.join(&epoch_file), &to_array(&s.epochs))?;
        let label_file = match &s.labels {
            Some(l) => {
                let f = format!("{}.eegl", s.id);
                write_labels(&dir.join(&f), l)?;
                Some(f)
            }
            None => None,
        };
        entries.push(SubjectEntry {
            id: s.id.clone(),
            epoch_file,
            label_file,
            n_epochs: s.epochs.len(),
        });
    }
    let manifest = DatasetManifest {
        name: dataset.name.clone(),
        sample_rate: dataset.sample_rate,
        n_channels: dataset.n_channels,
        n_classes: dataset.n_classes,
        subjects: entries,
    };
    let path = dir.join("manifest.txt");
    std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
