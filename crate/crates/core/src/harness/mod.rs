//! Dataset manifests, evaluation runs, runtime measurement and leaderboards.

mod evaluate;
mod leaderboard;
mod manifest;
mod runtime;

pub use evaluate::{
    evaluate, run_algorithm, Algorithm, BankSet, DatasetReport, EvalConfig, GainSummary, ImageResult, ReportBody,
    ReportMeta,
};
pub use leaderboard::{rank_leaderboard, render_leaderboard_json, render_leaderboard_text, LeaderboardRow, M4Mode};
pub use manifest::{build_manifest, DatasetManifest, ManifestEntry, ManifestOptions};
pub use runtime::{
    estimate_64m_runtime, measure_runtime, measure_runtime_with, median_seconds, RuntimeMeasurement,
    MEASURED_HEIGHT, MEASURED_WIDTH, SIXTY_FOUR_MEGAPIXELS,
};
