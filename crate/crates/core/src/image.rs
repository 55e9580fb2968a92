use crate::cfa::{CfaDescriptor, Channel};
use crate::error::{Error, Result};

pub const DEFAULT_BIT_DEPTH: u8 = 10;
pub const DEFAULT_BLACK_LEVEL: u16 = 64;
pub const DEFAULT_WHITE_LEVEL: u16 = 1023;

/// Single-plane mosaiced frame in the normalized `[0, 1]` domain.
#[derive(Clone, Debug, PartialEq)]
pub struct RawImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    cfa: CfaDescriptor,
    black_level: u16,
    white_level: u16,
}

impl RawImage {
    /// Builds a frame with the default sensor levels (64 / 1023).
    pub fn new(width: usize, height: usize, data: Vec<f64>, cfa: CfaDescriptor) -> Result<Self> {
        Self::with_levels(width, height, data, cfa, DEFAULT_BLACK_LEVEL, DEFAULT_WHITE_LEVEL)
    }

    pub fn with_levels(
        width: usize,
        height: usize,
        data: Vec<f64>,
        cfa: CfaDescriptor,
        black_level: u16,
        white_level: u16,
    ) -> Result<Self> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} frame with {} samples",
                data.len()
            )));
        }
        if !(0 < black_level && black_level < white_level) {
            return Err(Error::LevelRange(format!(
                "need 0 < black ({black_level}) < white ({white_level})"
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutOfRange(format!(
                "sample {} at ({}, {}) outside [0, 1]",
                data[i],
                i % width.max(1),
                i / width.max(1)
            )));
        }
        Ok(RawImage {
            width,
            height,
            data,
            cfa,
            black_level,
            white_level,
        })
    }

    /// Builds a frame from an arbitrary plane, clamping every sample into `[0, 1]`.
    pub fn from_clamped(
        width: usize,
        height: usize,
        mut data: Vec<f64>,
        cfa: CfaDescriptor,
    ) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(width, height, data, cfa)
    }

    pub fn constant(width: usize, height: usize, value: f64, cfa: CfaDescriptor) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], cfa)
    }

    /// Same samples, same levels, different descriptor.
    pub fn relabel(mut self, cfa: CfaDescriptor) -> Self {
        self.cfa = cfa;
        self
    }

    pub(crate) fn with_data(&self, data: Vec<f64>, cfa: CfaDescriptor) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        RawImage {
            width: self.width,
            height: self.height,
            data,
            cfa,
            black_level: self.black_level,
            white_level: self.white_level,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn cfa(&self) -> &CfaDescriptor {
        &self.cfa
    }

    pub fn black_level(&self) -> u16 {
        self.black_level
    }

    pub fn white_level(&self) -> u16 {
        self.white_level
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn channel_at(&self, x: usize, y: usize) -> Channel {
        self.cfa.channel_at(x, y)
    }

    pub fn same_shape(&self, other: &RawImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Multi-channel float image, one plane per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    channels: Vec<Channel>,
    planes: Vec<Vec<f64>>,
}

impl PlanarImage {
    pub fn new(
        width: usize,
        height: usize,
        channels: Vec<Channel>,
        planes: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if channels.len() != planes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} channels but {} planes",
                channels.len(),
                planes.len()
            )));
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].contains(c) {
                return Err(Error::InvalidArgument(format!("duplicate channel {c}")));
            }
        }
        let n = width
            .checked_mul(height)
            .ok_or(Error::DimensionOverflow { width, height })?;
        for (c, p) in channels.iter().zip(&planes) {
            if p.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "plane {c} has {} samples, expected {n}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::OutOfRange(format!("plane {c} holds a non-finite value")));
            }
        }
        Ok(PlanarImage {
            width,
            height,
            channels,
            planes,
        })
    }

    pub fn constant(width: usize, height: usize, channels: &[Channel], value: f64) -> Result<Self> {
        let planes = vec![vec![value; width * height]; channels.len()];
        Self::new(width, height, channels.to_vec(), planes)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }

    pub fn plane(&self, channel: Channel) -> Option<&[f64]> {
        self.channels
            .iter()
            .position(|&c| c == channel)
            .map(|i| self.planes[i].as_slice())
    }

    pub fn plane_mut(&mut self, channel: Channel) -> Option<&mut [f64]> {
        let i = self.channels.iter().position(|&c| c == channel)?;
        Some(self.planes[i].as_mut_slice())
    }

    pub fn require_plane(&self, channel: Channel) -> Result<&[f64]> {
        self.plane(channel).ok_or(Error::MissingChannel(channel))
    }

    /// Appends a plane for a channel not yet present.
    pub fn with_plane(mut self, channel: Channel, plane: Vec<f64>) -> Result<Self> {
        if self.channels.contains(&channel) {
            return Err(Error::InvalidArgument(format!("duplicate channel {channel}")));
        }
        if plane.len() != self.width * self.height {
            return Err(Error::DimensionMismatch(format!(
                "plane {channel} has {} samples, expected {}",
                plane.len(),
                self.width * self.height
            )));
        }
        self.channels.push(channel);
        self.planes.push(plane);
        Ok(self)
    }

    pub fn same_shape(&self, other: &PlanarImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn into_planes(self) -> Vec<Vec<f64>> {
        self.planes
    }
}
