use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ManifestEntry};
use crate::cfa::{CfaDescriptor, CfaRegistry};
use crate::error::{Error, Result};
use crate::image::RawImage;
use crate::isp::IspConfig;
use crate::metrics::{aggregate, score_pair_with, Aggregate, LpipsPolicy, MetricKnobs, MetricReport};
use crate::raw_io::{format_gain, load_raw, Split};
use crate::remosaic::{apply_filter_bank, remosaic_nearest, remosaic_white_guided, FilterBank};

/// Filter banks selected by input gain, with an optional catch-all.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BankSet {
    pub per_gain: Vec<(f64, FilterBank)>,
    pub fallback: Option<FilterBank>,
}

impl BankSet {
    pub fn single(bank: FilterBank) -> Self {
        BankSet {
            per_gain: Vec::new(),
            fallback: Some(bank),
        }
    }

    pub fn for_gain(&self, gain_db: f64) -> Result<&FilterBank> {
        self.per_gain
            .iter()
            .find(|(g, _)| (g - gain_db).abs() < 1e-9)
            .map(|(_, b)| b)
            .or(self.fallback.as_ref())
            .ok_or_else(|| Error::InvalidArgument(format!("no filter bank for {}", format_gain(gain_db))))
    }
}

#[derive(Clone, Debug)]
pub enum Algorithm {
    /// Returns the ground truth itself; a sanity check for the scoring path.
    GroundTruth,
    Nearest,
    WhiteGuided,
    FilterBank(Arc<BankSet>),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::GroundTruth => "ground_truth",
            Algorithm::Nearest => "nearest",
            Algorithm::WhiteGuided => "white_guided",
            Algorithm::FilterBank(_) => "filter_bank",
        }
    }

    fn params(&self) -> serde_json::Value {
        match self {
            Algorithm::FilterBank(set) => {
                let describe = |b: &FilterBank| {
                    serde_json::json!({
                        "patch_radius": b.patch_radius(),
                        "lambda": b.lambda(),
                        "cfa_in": b.cfa_in().name(),
                        "cfa_out": b.cfa_out().name(),
                    })
                };
                serde_json::json!({
                    "per_gain": set.per_gain.iter().map(|(g, b)| {
                        let mut v = describe(b);
                        v["gain_db"] = serde_json::json!(g);
                        v
                    }).collect::<Vec<_>>(),
                    "fallback": set.fallback.as_ref().map(describe),
                })
            }
            _ => serde_json::json!({}),
        }
    }
}

/// Runs one remosaic algorithm. `gt` is only read by [`Algorithm::GroundTruth`].
pub fn run_algorithm(
    alg: &Algorithm,
    input: &RawImage,
    gain_db: f64,
    cfa_out: &CfaDescriptor,
    gt: Option<&RawImage>,
) -> Result<RawImage> {
    match alg {
        Algorithm::GroundTruth => gt
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("ground-truth algorithm needs a ground truth".into())),
        Algorithm::Nearest => remosaic_nearest(input, cfa_out),
        Algorithm::WhiteGuided => remosaic_white_guided(input, cfa_out),
        Algorithm::FilterBank(set) => apply_filter_bank(input, set.for_gain(gain_db)?),
    }
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub isp: IspConfig,
    pub knobs: MetricKnobs,
    pub lpips: LpipsPolicy,
    pub registry: CfaRegistry,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            isp: IspConfig::default(),
            knobs: MetricKnobs::default(),
            lpips: LpipsPolicy::default(),
            registry: CfaRegistry::builtin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub scene_id: String,
    pub split: Split,
    pub gain_db: f64,
    pub report: Option<MetricReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSummary {
    pub gain_db: f64,
    pub summary: Aggregate,
}

/// Everything that must be reproducible between runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub algorithm: String,
    pub algorithm_params: serde_json::Value,
    pub manifest_root: String,
    pub isp: IspConfig,
    pub metrics: MetricKnobs,
    pub lpips_policy: String,
    pub images: Vec<ImageResult>,
    pub failures: usize,
    pub summary: Option<Aggregate>,
    pub per_gain: Vec<GainSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub generated_unix_s: u64,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub report: ReportBody,
    pub meta: ReportMeta,
}

impl DatasetReport {
    /// Canonical JSON of the reproducible part.
    pub fn body_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn failures(&self) -> usize {
        self.report.failures
    }

    pub fn summary(&self) -> Option<&Aggregate> {
        self.report.summary.as_ref()
    }

    pub fn gain_summary(&self, gain_db: f64) -> Option<&Aggregate> {
        self.report
            .per_gain
            .iter()
            .find(|g| (g.gain_db - gain_db).abs() < 1e-9)
            .map(|g| &g.summary)
    }
}

fn score_entry(entry: &ManifestEntry, alg: &Algorithm, cfg: &EvalConfig) -> Result<MetricReport> {
    let gt_path = entry
        .gt
        .as_ref()
        .ok_or_else(|| Error::Manifest(format!("{}: no ground truth to score against", entry.scene_id)))?;
    let input = load_raw(&entry.input, &cfg.registry)?;
    let gt = load_raw(gt_path, &cfg.registry)?;
    let pred = run_algorithm(alg, &input, entry.gain_db, gt.cfa(), Some(&gt))?;
    score_pair_with(&pred, &gt, &cfg.isp, &cfg.lpips, &cfg.knobs)
}

/// Scores every manifest entry. Images are processed in parallel and
/// collected in manifest order; a failing image is recorded and the run
/// continues.
pub fn evaluate(manifest: &DatasetManifest, alg: &Algorithm, cfg: &EvalConfig) -> Result<DatasetReport> {
    if manifest.entries.is_empty() {
        return Err(Error::Manifest("empty manifest".into()));
    }
    cfg.isp.validate()?;
    let images: Vec<ImageResult> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let (report, error) = match score_entry(e, alg, cfg) {
                Ok(r) => (Some(r), None),
                Err(err) => (None, Some(err.to_string())),
            };
            ImageResult {
                scene_id: e.scene_id.clone(),
                split: e.split,
                gain_db: e.gain_db,
                report,
                error,
            }
        })
        .collect();

    let ok: Vec<MetricReport> = images.iter().filter_map(|i| i.report.clone()).collect();
    let default_lpips = match cfg.lpips {
        LpipsPolicy::Default(v) => v,
        LpipsPolicy::External(_) => cfg.knobs.lpips_default,
    };
    let mut gains: Vec<f64> = images.iter().map(|i| i.gain_db).collect();
    gains.sort_by(f64::total_cmp);
    gains.dedup();
    let per_gain = gains
        .into_iter()
        .filter_map(|g| {
            let rows: Vec<MetricReport> = images
                .iter()
                .filter(|i| i.gain_db == g)
                .filter_map(|i| i.report.clone())
                .collect();
            aggregate(&rows, default_lpips).map(|summary| GainSummary { gain_db: g, summary })
        })
        .collect();
    let body = ReportBody {
        algorithm: alg.name().to_string(),
        algorithm_params: alg.params(),
        manifest_root: manifest.root.display().to_string(),
        isp: cfg.isp.clone(),
        metrics: cfg.knobs.clone(),
        lpips_policy: cfg.lpips.describe(),
        failures: images.len() - ok.len(),
        summary: aggregate(&ok, default_lpips),
        per_gain,
        images,
    };
    Ok(DatasetReport {
        report: body,
        meta: ReportMeta {
            generated_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
