use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfa::{CfaDescriptor, Channel};
use crate::image::{PlanarImage, RawImage};

pub(crate) fn random_plane(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub(crate) fn random_raw(w: usize, h: usize, cfa: CfaDescriptor, seed: u64) -> RawImage {
    RawImage::new(w, h, random_plane(w * h, seed), cfa).unwrap()
}

pub(crate) fn random_planar(w: usize, h: usize, channels: &[Channel], seed: u64) -> PlanarImage {
    let planes = (0..channels.len())
        .map(|i| random_plane(w * h, seed.wrapping_mul(31).wrapping_add(i as u64)))
        .collect();
    PlanarImage::new(w, h, channels.to_vec(), planes).unwrap()
}
