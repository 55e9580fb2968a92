//! RGBW-to-Bayer remosaic benchmark toolkit.
//!
//! Builds aligned RGBW/Bayer training pairs, synthesizes sensor noise, runs
//! classical and least-squares remosaic algorithms, renders Bayer frames
//! through a minimal ISP and scores them with PSNR, SSIM, LPIPS and KLD
//! combined into the M4 ranking score.

mod border;
pub mod cfa;
pub mod config;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod image;
pub mod isp;
pub mod metrics;
pub mod mosaic;
pub mod noise;
pub mod raw_io;
pub mod remosaic;

#[cfg(test)]
mod test_util;

pub use cfa::{CfaDescriptor, CfaKind, CfaRegistry, Channel, ValidationReport};
pub use error::{Error, Result};
pub use image::{PlanarImage, RawImage};
pub use mosaic::{expand_cfa_channels, mosaic};
pub use config::ToolkitConfig;
pub use datagen::{
    crop_center, diagonal_bin, generate_pair, generate_pair_with, generate_synthetic_scene, synthetic_pairs,
    write_pairs, BinnedCapture, PairConfig, PairSample, SceneKind, SyntheticSetSpec, CHALLENGE_GAINS_DB,
};
pub use harness::{
    build_manifest, estimate_64m_runtime, evaluate, measure_runtime, rank_leaderboard, Algorithm, BankSet,
    DatasetManifest, DatasetReport, EvalConfig, LeaderboardRow, M4Mode, ManifestOptions, RuntimeMeasurement,
};
pub use isp::{apply_transfer, demosaic, demosaic_bilinear, demosaic_mhc, run_isp, DemosaicKind, IspConfig, Transfer};
pub use metrics::{
    kld_bayer, lpips_external, m4, psnr, score_pair, ssim, Aggregate, KldParams, LpipsPolicy, LpipsProvider,
    MetricKnobs, MetricReport, SsimParams,
};
pub use noise::{noise_variance, profile_for_gain, synthesize_noise, NoiseProfile, NoiseRegistry};
pub use raw_io::{load_raw, read_raw, save_raw, write_raw, RawEncoding, Split};
pub use remosaic::{
    apply_filter_bank, interpolate_white_plane, remosaic_nearest, remosaic_white_guided, train_filter_bank,
    FilterBank, TrainOptions,
};
