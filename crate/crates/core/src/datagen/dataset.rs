use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_pair_with, generate_synthetic_scene, PairConfig, PairSample, SceneKind, CHALLENGE_GAINS_DB};
use crate::error::Result;
use crate::mosaic::mosaic;
use crate::noise::{synthesize_noise, NoiseRegistry};
use crate::raw_io::{gt_path, input_path, save_raw, Split};

/// Parameters of a synthetic split. Scene `i` uses kind `ALL[i % 5]`, is
/// rendered at twice `size` per side, mosaiced to an RGBW capture and then run
/// through the pair pipeline, which halves it back to `size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSetSpec {
    pub split: Split,
    pub scenes: usize,
    pub size: usize,
    pub gains_db: Vec<f64>,
    pub seed: u64,
    pub pair: PairConfig,
}

impl SyntheticSetSpec {
    pub fn new(split: Split, scenes: usize, size: usize, seed: u64) -> Self {
        SyntheticSetSpec {
            split,
            scenes,
            size,
            gains_db: CHALLENGE_GAINS_DB.to_vec(),
            seed,
            pair: PairConfig::default(),
        }
    }

    /// The validation set used by the acceptance suite: 10 scenes x 3 gains at 512x512.
    pub fn bundled_valid() -> Self {
        Self::new(Split::Valid, 10, 512, 2022)
    }

    pub fn bundled_train() -> Self {
        Self::new(Split::Train, 10, 512, 2022)
    }

    pub fn scene_id(&self, index: usize) -> String {
        format!("{}-{index:03}-{}", self.split, SceneKind::ALL[index % SceneKind::ALL.len()])
    }
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a list of integers into one well-mixed seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed, |acc, &p| mix(acc ^ p))
}

/// Generates every (scene, gain) sample of a synthetic split, scene-major and
/// in the order of `spec.gains_db`. The clean ground truth is shared by all
/// gains of a scene; noise is applied to the RGBW input only.
pub fn synthetic_pairs(spec: &SyntheticSetSpec, noise: &NoiseRegistry) -> Result<Vec<PairSample>> {
    let profiles = spec
        .gains_db
        .iter()
        .map(|&g| noise.profile_for_gain(g))
        .collect::<Result<Vec<_>>>()?;
    let per_scene: Vec<Vec<PairSample>> = (0..spec.scenes)
        .into_par_iter()
        .map(|i| -> Result<Vec<PairSample>> {
            let kind = SceneKind::ALL[i % SceneKind::ALL.len()];
            let scene_seed = derive_seed(&[spec.seed, spec.split as u64, i as u64]);
            let scene = generate_synthetic_scene(kind, 2 * spec.size, 2 * spec.size, scene_seed)?;
            let capture = mosaic(&scene, &spec.pair.input_cfa)?;
            let clean = generate_pair_with(&capture, &spec.pair, &spec.scene_id(i))?;
            profiles
                .iter()
                .map(|p| {
                    let input = if p.gain_db == 0.0 && p.read_sigma == 0.0 && p.shot_k == 0.0 {
                        clean.input_rgbw.clone()
                    } else {
                        let noise_seed = derive_seed(&[scene_seed, p.gain_db.to_bits()]);
                        synthesize_noise(&clean.input_rgbw, p, noise_seed)?
                    };
                    Ok(PairSample {
                        input_rgbw: input,
                        gt_bayer: clean.gt_bayer.clone(),
                        scene_id: clean.scene_id.clone(),
                        gain_db: p.gain_db,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_scene.into_iter().flatten().collect())
}

/// Writes samples using the dataset layout: one `<scene>_gt.rmsc` per scene
/// and one `<scene>_<gain>dB.rmsc` per sample.
pub fn write_pairs(root: &Path, split: Split, pairs: &[PairSample]) -> Result<()> {
    let mut written_gt: Vec<&str> = Vec::new();
    for p in pairs {
        if !written_gt.contains(&p.scene_id.as_str()) {
            save_raw(gt_path(root, split, &p.scene_id), &p.gt_bayer)?;
            written_gt.push(&p.scene_id);
        }
        save_raw(input_path(root, split, &p.scene_id, p.gain_db), &p.input_rgbw)?;
    }
    Ok(())
}
