//! Shared fixtures for the criterion benches.

use rgbw_core::{
    generate_synthetic_scene, mosaic, synthetic_pairs, train_filter_bank, CfaDescriptor, FilterBank, NoiseRegistry,
    RawImage, SceneKind, Split, SyntheticSetSpec,
};

pub const SEED: u64 = 7;

/// An RGBW mosaic of a textured synthetic scene.
pub fn rgbw_frame(width: usize, height: usize) -> RawImage {
    let scene = generate_synthetic_scene(SceneKind::NoiseField, width, height, SEED).expect("scene");
    mosaic(&scene, &CfaDescriptor::rgbw_default()).expect("mosaic")
}

/// An RGGB mosaic of the same kind of scene.
pub fn bayer_frame(width: usize, height: usize) -> RawImage {
    let scene = generate_synthetic_scene(SceneKind::NoiseField, width, height, SEED).expect("scene");
    mosaic(&scene, &CfaDescriptor::rggb()).expect("mosaic")
}

/// A radius-2 bank trained on a small noiseless synthetic split.
pub fn trained_bank() -> FilterBank {
    let mut spec = SyntheticSetSpec::new(Split::Train, 5, 96, SEED);
    spec.gains_db = vec![0.0];
    let pairs = synthetic_pairs(&spec, &NoiseRegistry::default()).expect("pairs");
    train_filter_bank(&pairs, 2, 1e-4).expect("train")
}
