use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::CHALLENGE_GAINS_DB;
use crate::error::{Error, Result};
use crate::raw_io::{format_gain, parse_dataset_stem, DatasetFile, Split, RAW_EXTENSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scene_id: String,
    pub split: Split,
    pub gain_db: f64,
    pub input: PathBuf,
    pub gt: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    /// Non-fatal findings: missing gains, missing ground truth, orphan ground truth.
    pub warnings: Vec<String>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn filter(&self, pred: impl Fn(&ManifestEntry) -> bool) -> DatasetManifest {
        DatasetManifest {
            root: self.root.clone(),
            entries: self.entries.iter().filter(|e| pred(e)).cloned().collect(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestOptions {
    pub splits: Vec<Split>,
    /// Gains every scene should have; an absent gain produces a warning.
    pub expected_gains: Vec<f64>,
}

impl Default for ManifestOptions {
    fn default() -> Self {
        ManifestOptions {
            splits: Split::ALL.to_vec(),
            expected_gains: CHALLENGE_GAINS_DB.to_vec(),
        }
    }
}

#[derive(Default)]
struct SceneFiles {
    inputs: Vec<(f64, PathBuf)>,
    gt: Option<PathBuf>,
}

/// Scans `<root>/<split>/` for `<scene>_<gain>dB.rmsc` inputs and
/// `<scene>_gt.rmsc` ground truth. Entries are sorted by split, scene id
/// and gain. Files with other extensions are ignored.
pub fn build_manifest(root: &Path, opts: &ManifestOptions) -> Result<DatasetManifest> {
    if !root.is_dir() {
        return Err(Error::Manifest(format!("dataset root {} is not a directory", root.display())));
    }
    let mut scenes: BTreeMap<(Split, String), SceneFiles> = BTreeMap::new();
    let mut malformed = Vec::new();
    let mut splits = opts.splits.clone();
    splits.sort();
    splits.dedup();
    for &split in &splits {
        let dir = root.join(split.as_str());
        if !dir.is_dir() {
            continue;
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| Error::file(&dir, e))?
            .map(|d| d.map(|d| d.path()).map_err(|e| Error::file(&dir, e)))
            .collect::<Result<_>>()?;
        paths.sort();
        for path in paths {
            if path.extension().and_then(|e| e.to_str()) != Some(RAW_EXTENSION) {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            match parse_dataset_stem(stem) {
                None => malformed.push(path),
                Some(DatasetFile::GroundTruth { scene }) => {
                    scenes.entry((split, scene)).or_default().gt = Some(path);
                }
                Some(DatasetFile::Input { scene, gain_db }) => {
                    let files = scenes.entry((split, scene.clone())).or_default();
                    if let Some((_, prev)) = files.inputs.iter().find(|(g, _)| *g == gain_db) {
                        return Err(Error::Manifest(format!(
                            "duplicate input for scene `{scene}` at {}: {} and {}",
                            format_gain(gain_db),
                            prev.display(),
                            path.display()
                        )));
                    }
                    files.inputs.push((gain_db, path));
                }
            }
        }
    }
    if !malformed.is_empty() {
        return Err(Error::MalformedFilenames(malformed));
    }

    let mut seen: BTreeMap<&str, Split> = BTreeMap::new();
    for (split, scene) in scenes.keys() {
        if let Some(other) = seen.insert(scene, *split) {
            return Err(Error::Manifest(format!(
                "scene `{scene}` appears in both {other} and {split}"
            )));
        }
    }

    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for ((split, scene), mut files) in scenes {
        if files.inputs.is_empty() {
            warnings.push(format!("{split}/{scene}: ground truth without inputs"));
            continue;
        }
        if files.gt.is_none() && split != Split::Test {
            warnings.push(format!("{split}/{scene}: missing ground truth"));
        }
        for &g in &opts.expected_gains {
            if !files.inputs.iter().any(|(x, _)| *x == g) {
                warnings.push(format!("{split}/{scene}: missing {} input", format_gain(g)));
            }
        }
        files.inputs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (gain_db, input) in files.inputs {
            entries.push(ManifestEntry {
                scene_id: scene.clone(),
                split,
                gain_db,
                input,
                gt: files.gt.clone(),
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::Manifest(format!("no dataset inputs under {}", root.display())));
    }
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        entries,
        warnings,
    })
}
