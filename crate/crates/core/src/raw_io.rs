//! On-disk formats: the RMSC1 raw container, 16-bit PGM planes, 8-bit RGB
//! PNG, and the dataset directory layout.
//!
//! RMSC1 layout (all integers little-endian):
//!
//! | offset | size | field                  |
//! |--------|------|------------------------|
//! | 0      | 8    | magic `RGBWRMS1`       |
//! | 8      | 4    | width (u32)            |
//! | 12     | 4    | height (u32)           |
//! | 16     | 2    | bit depth (u16, 8..=16)|
//! | 18     | 2    | black level (u16)      |
//! | 20     | 2    | white level (u16)      |
//! | 22     | 2    | CFA name length (u16)  |
//! | 24     | n    | CFA name (UTF-8)       |
//! | 24 + n | 2·w·h| samples (u16), row-major |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cfa::{CfaRegistry, Channel};
use crate::error::{Error, Result};
use crate::image::{PlanarImage, RawImage, DEFAULT_BIT_DEPTH, DEFAULT_BLACK_LEVEL, DEFAULT_WHITE_LEVEL};

pub const RMSC_MAGIC: &[u8; 8] = b"RGBWRMS1";
const FIXED_HEADER_LEN: usize = 24;

/// Quantization parameters used when writing a raw frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEncoding {
    pub bit_depth: u8,
    pub black_level: u16,
    pub white_level: u16,
}

impl Default for RawEncoding {
    fn default() -> Self {
        RawEncoding {
            bit_depth: DEFAULT_BIT_DEPTH,
            black_level: DEFAULT_BLACK_LEVEL,
            white_level: DEFAULT_WHITE_LEVEL,
        }
    }
}

impl RawEncoding {
    pub fn validate(&self) -> Result<()> {
        if !(8..=16).contains(&self.bit_depth) {
            return Err(Error::LevelRange(format!(
                "bit depth {} outside [8, 16]",
                self.bit_depth
            )));
        }
        let max_code = (1u32 << self.bit_depth) - 1;
        if u32::from(self.white_level) > max_code {
            return Err(Error::LevelRange(format!(
                "white level {} exceeds {max_code} at {} bits",
                self.white_level, self.bit_depth
            )));
        }
        if !(0 < self.black_level && self.black_level < self.white_level) {
            return Err(Error::LevelRange(format!(
                "need 0 < black ({}) < white ({})",
                self.black_level, self.white_level
            )));
        }
        Ok(())
    }

    /// Normalized value to code, rounding half up and clamping to the levels.
    #[inline]
    pub fn quantize(&self, v: f64) -> u16 {
        let (b, w) = (f64::from(self.black_level), f64::from(self.white_level));
        (b + v * (w - b) + 0.5).floor().clamp(b, w) as u16
    }

    #[inline]
    pub fn dequantize(&self, code: u16) -> f64 {
        let (b, w) = (f64::from(self.black_level), f64::from(self.white_level));
        ((f64::from(code) - b) / (w - b)).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RmscHeader {
    pub width: u32,
    pub height: u32,
    pub encoding: RawEncoding,
    pub cfa_name: String,
}

pub fn write_raw(img: &RawImage, encoding: &RawEncoding) -> Result<Vec<u8>> {
    encoding.validate()?;
    let overflow = || Error::DimensionOverflow {
        width: img.width(),
        height: img.height(),
    };
    let width = u32::try_from(img.width()).map_err(|_| overflow())?;
    let height = u32::try_from(img.height()).map_err(|_| overflow())?;
    let name = img.cfa().name().as_bytes();
    let name_len = u16::try_from(name.len())
        .map_err(|_| Error::InvalidHeader("CFA name longer than 65535 bytes".into()))?;
    let payload_len = img
        .data()
        .len()
        .checked_mul(2)
        .ok_or_else(overflow)?;

    let mut out = Vec::with_capacity(FIXED_HEADER_LEN + name.len() + payload_len);
    out.extend_from_slice(RMSC_MAGIC);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.extend_from_slice(&u16::from(encoding.bit_depth).to_le_bytes());
    out.extend_from_slice(&encoding.black_level.to_le_bytes());
    out.extend_from_slice(&encoding.white_level.to_le_bytes());
    out.extend_from_slice(&name_len.to_le_bytes());
    out.extend_from_slice(name);
    for &v in img.data() {
        out.extend_from_slice(&encoding.quantize(v).to_le_bytes());
    }
    Ok(out)
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn read_header(bytes: &[u8]) -> Result<(RmscHeader, usize)> {
    if bytes.len() < RMSC_MAGIC.len() {
        return Err(Error::Truncated(format!("{} bytes, no magic", bytes.len())));
    }
    if &bytes[..8] != RMSC_MAGIC {
        return Err(Error::BadMagic(bytes[..8].to_vec()));
    }
    if bytes.len() < FIXED_HEADER_LEN {
        return Err(Error::Truncated("header cut short".into()));
    }
    let width = le_u32(bytes, 8);
    let height = le_u32(bytes, 12);
    let depth = le_u16(bytes, 16);
    let encoding = RawEncoding {
        bit_depth: u8::try_from(depth)
            .map_err(|_| Error::InvalidHeader(format!("bit depth {depth}")))?,
        black_level: le_u16(bytes, 18),
        white_level: le_u16(bytes, 20),
    };
    encoding
        .validate()
        .map_err(|e| Error::InvalidHeader(e.to_string()))?;
    let name_len = usize::from(le_u16(bytes, 22));
    let name_end = FIXED_HEADER_LEN + name_len;
    if bytes.len() < name_end {
        return Err(Error::Truncated("CFA name cut short".into()));
    }
    let cfa_name = std::str::from_utf8(&bytes[FIXED_HEADER_LEN..name_end])
        .map_err(|_| Error::InvalidHeader("CFA name is not UTF-8".into()))?
        .to_string();
    Ok((
        RmscHeader {
            width,
            height,
            encoding,
            cfa_name,
        },
        name_end,
    ))
}

pub fn read_raw_with_header(bytes: &[u8], registry: &CfaRegistry) -> Result<(RmscHeader, RawImage)> {
    let (header, offset) = read_header(bytes)?;
    let (w, h) = (header.width as usize, header.height as usize);
    let n = w
        .checked_mul(h)
        .ok_or(Error::DimensionOverflow { width: w, height: h })?;
    let expected = n.checked_mul(2).and_then(|p| p.checked_add(offset));
    let expected = expected.ok_or(Error::DimensionOverflow { width: w, height: h })?;
    if bytes.len() < expected {
        return Err(Error::Truncated(format!(
            "payload has {} bytes, expected {}",
            bytes.len() - offset,
            expected - offset
        )));
    }
    if bytes.len() > expected {
        return Err(Error::InvalidHeader(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let cfa = registry.get(&header.cfa_name)?.clone();
    let data = bytes[offset..]
        .chunks_exact(2)
        .map(|c| header.encoding.dequantize(u16::from_le_bytes([c[0], c[1]])))
        .collect();
    let img = RawImage::with_levels(
        w,
        h,
        data,
        cfa,
        header.encoding.black_level,
        header.encoding.white_level,
    )?;
    Ok((header, img))
}

pub fn read_raw(bytes: &[u8], registry: &CfaRegistry) -> Result<RawImage> {
    read_raw_with_header(bytes, registry).map(|(_, img)| img)
}

/// Writes with the frame's own levels at the smallest depth that holds them.
pub fn encoding_for(img: &RawImage) -> RawEncoding {
    let white = img.white_level();
    let bits = (16 - white.leading_zeros() as u8).max(8);
    RawEncoding {
        bit_depth: bits,
        black_level: img.black_level(),
        white_level: white,
    }
}

pub fn save_raw(path: impl AsRef<Path>, img: &RawImage) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_raw(img, &encoding_for(img))?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::file(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

pub fn load_raw(path: impl AsRef<Path>, registry: &CfaRegistry) -> Result<RawImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    read_raw(&bytes, registry)
}

/// A single 16-bit grayscale plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm16 {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

/// Binary PGM (P5) with maxval 65535, big-endian samples.
pub fn write_pgm16(width: usize, height: usize, data: &[u16]) -> Result<Vec<u8>> {
    if width.checked_mul(height) != Some(data.len()) {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} plane with {} samples",
            data.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(data.len() * 2);
    for &v in data {
        out.extend_from_slice(&v.to_be_bytes());
    }
    Ok(out)
}

pub fn read_pgm16(bytes: &[u8]) -> Result<Pgm16> {
    let mut pos = 0;
    let mut token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Truncated("PGM header cut short".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(bytes)?;
    if magic != "P5" {
        return Err(Error::BadMagic(magic.into_bytes()));
    }
    let num = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::InvalidHeader(format!("PGM field {s:?} is not a number")))
    };
    let width = num(token(bytes)?)?;
    let height = num(token(bytes)?)?;
    let maxval = num(token(bytes)?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::InvalidHeader(format!("PGM maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width
        .checked_mul(height)
        .ok_or(Error::DimensionOverflow { width, height })?;
    let bpp = if maxval < 256 { 1 } else { 2 };
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < n * bpp {
        return Err(Error::Truncated(format!(
            "PGM raster has {} bytes, expected {}",
            raster.len(),
            n * bpp
        )));
    }
    let data = if bpp == 1 {
        raster[..n].iter().map(|&b| u16::from(b)).collect()
    } else {
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(Pgm16 {
        width,
        height,
        maxval: maxval as u16,
        data,
    })
}

/// Interprets a PGM plane as raw sensor codes with the given levels.
pub fn raw_from_pgm16(
    pgm: &Pgm16,
    cfa: crate::cfa::CfaDescriptor,
    black_level: u16,
    white_level: u16,
) -> Result<RawImage> {
    let enc = RawEncoding {
        bit_depth: 16,
        black_level,
        white_level,
    };
    enc.validate()?;
    let data = pgm.data.iter().map(|&c| enc.dequantize(c)).collect();
    RawImage::with_levels(pgm.width, pgm.height, data, cfa, black_level, white_level)
}

/// Inverse of [`raw_from_pgm16`]: quantized sensor codes as a PGM plane.
pub fn raw_to_pgm16(img: &RawImage) -> Result<Vec<u8>> {
    let enc = RawEncoding {
        bit_depth: 16,
        black_level: img.black_level(),
        white_level: img.white_level(),
    };
    let codes: Vec<u16> = img.data().iter().map(|&v| enc.quantize(v)).collect();
    write_pgm16(img.width(), img.height(), &codes)
}

#[inline]
fn to_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor() as u8
}

/// 8-bit RGB PNG, half-up rounding. Values outside `[0, 1]` are rejected.
pub fn write_rgb_png(img: &PlanarImage) -> Result<Vec<u8>> {
    let planes = [
        img.require_plane(Channel::R)?,
        img.require_plane(Channel::G)?,
        img.require_plane(Channel::B)?,
    ];
    for (c, p) in [Channel::R, Channel::G, Channel::B].iter().zip(planes) {
        if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange(format!("plane {c} holds {v}; clamp before export")));
        }
    }
    let n = img.width() * img.height();
    let mut pixels = Vec::with_capacity(3 * n);
    for i in 0..n {
        pixels.extend(planes.iter().map(|p| to_u8(p[i])));
    }
    let mut out = Vec::new();
    {
        let w = u32::try_from(img.width()).map_err(|_| Error::DimensionOverflow {
            width: img.width(),
            height: img.height(),
        })?;
        let h = u32::try_from(img.height()).map_err(|_| Error::DimensionOverflow {
            width: img.width(),
            height: img.height(),
        })?;
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(&pixels)
            .map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes an 8-bit RGB PNG into interleaved bytes.
pub fn read_rgb_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Png(format!(
            "expected 8-bit RGB, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, buf))
}

/// Dataset split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

pub const RAW_EXTENSION: &str = "rmsc";

pub fn format_gain(gain_db: f64) -> String {
    format!("{gain_db}dB")
}

/// `<root>/<split>/<scene>_<gain>dB.rmsc`
pub fn input_path(root: &Path, split: Split, scene: &str, gain_db: f64) -> PathBuf {
    root.join(split.as_str())
        .join(format!("{scene}_{}.{RAW_EXTENSION}", format_gain(gain_db)))
}

/// `<root>/<split>/<scene>_gt.rmsc`
pub fn gt_path(root: &Path, split: Split, scene: &str) -> PathBuf {
    root.join(split.as_str())
        .join(format!("{scene}_gt.{RAW_EXTENSION}"))
}

/// What a dataset file name encodes.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetFile {
    Input { scene: String, gain_db: f64 },
    GroundTruth { scene: String },
}

/// Parses a dataset file stem (`scene_24dB` or `scene_gt`); `None` when malformed.
pub fn parse_dataset_stem(stem: &str) -> Option<DatasetFile> {
    let (scene, tag) = stem.rsplit_once('_')?;
    if scene.is_empty() {
        return None;
    }
    if tag == "gt" {
        return Some(DatasetFile::GroundTruth {
            scene: scene.to_string(),
        });
    }
    let gain: f64 = tag.strip_suffix("dB")?.parse().ok()?;
    gain.is_finite().then(|| DatasetFile::Input {
        scene: scene.to_string(),
        gain_db: gain,
    })
}
