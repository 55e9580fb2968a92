//! Color filter array descriptors.
//!
//! A [`CfaDescriptor`] is a periodic tile of [`Channel`]s. Pixel `(x, y)` of a
//! mosaiced frame records the channel found at `(x mod w, y mod h)` of the
//! tile. Two families are supported: 2x2 Bayer tiles and RGBW tiles whose
//! white sites form a checkerboard.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Color identity of a single sensor site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
    W,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::R, Channel::G, Channel::B, Channel::W];

    /// Plane order used by [`crate::mosaic::expand_cfa_channels`]: white, green, blue, red.
    pub const EXPANSION_ORDER: [Channel; 4] = [Channel::W, Channel::G, Channel::B, Channel::R];

    pub fn as_char(self) -> char {
        match self {
            Channel::R => 'R',
            Channel::G => 'G',
            Channel::B => 'B',
            Channel::W => 'W',
        }
    }

    pub fn from_char(c: char) -> Option<Channel> {
        match c.to_ascii_uppercase() {
            'R' => Some(Channel::R),
            'G' => Some(Channel::G),
            'B' => Some(Channel::B),
            'W' => Some(Channel::W),
            _ => None,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Which family a descriptor belongs to, as determined by validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CfaKind {
    Bayer,
    Rgbw,
}

/// Periodic CFA tile, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfaDescriptor {
    name: String,
    tile_width: usize,
    tile_height: usize,
    layout: Vec<Channel>,
}

pub const RGBW_DEFAULT_NAME: &str = "rgbw4x4";

impl CfaDescriptor {
    /// Builds a descriptor after checking the tile shape. Family rules (Bayer
    /// multiset, white checkerboard) are checked by [`CfaDescriptor::validate`].
    pub fn new(
        name: impl Into<String>,
        tile_width: usize,
        tile_height: usize,
        layout: Vec<Channel>,
    ) -> Result<Self> {
        let name = name.into();
        if tile_width == 0 || tile_height == 0 {
            return Err(Error::InvalidDescriptor {
                name,
                reason: "tile dimensions must be at least 1".into(),
            });
        }
        if layout.len() != tile_width * tile_height {
            return Err(Error::InvalidDescriptor {
                reason: format!(
                    "layout has {} entries, tile is {}x{}",
                    layout.len(),
                    tile_width,
                    tile_height
                ),
                name,
            });
        }
        Ok(CfaDescriptor {
            name,
            tile_width,
            tile_height,
            layout,
        })
    }

    /// Parses a layout written as rows separated by `/`, e.g. `"RG/GB"`.
    pub fn from_rows(name: impl Into<String>, rows: &str) -> Result<Self> {
        let name = name.into();
        let rows: Vec<&str> = rows.split('/').map(str::trim).collect();
        let tile_height = rows.len();
        let tile_width = rows.first().map_or(0, |r| r.chars().count());
        let mut layout = Vec::with_capacity(tile_width * tile_height);
        for row in &rows {
            if row.chars().count() != tile_width {
                return Err(Error::InvalidDescriptor {
                    name,
                    reason: "rows have different lengths".into(),
                });
            }
            for c in row.chars() {
                layout.push(Channel::from_char(c).ok_or_else(|| Error::InvalidDescriptor {
                    name: name.clone(),
                    reason: format!("unknown channel letter {c:?}"),
                })?);
            }
        }
        Self::new(name, tile_width, tile_height, layout)
    }

    /// The reference 4x4 RGBW tile. Every 2x2 sub-block carries W on its main
    /// diagonal and one color on the anti-diagonal; sub-block colors follow RGGB.
    pub fn rgbw_default() -> Self {
        Self::from_rows(RGBW_DEFAULT_NAME, "WRWG/RWGW/WGWB/GWBW").expect("static layout")
    }

    pub fn rggb() -> Self {
        Self::from_rows("rggb", "RG/GB").expect("static layout")
    }

    pub fn bggr() -> Self {
        Self::from_rows("bggr", "BG/GR").expect("static layout")
    }

    pub fn grbg() -> Self {
        Self::from_rows("grbg", "GR/BG").expect("static layout")
    }

    pub fn gbrg() -> Self {
        Self::from_rows("gbrg", "GB/RG").expect("static layout")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tile_width(&self) -> usize {
        self.tile_width
    }

    pub fn tile_height(&self) -> usize {
        self.tile_height
    }

    pub fn layout(&self) -> &[Channel] {
        &self.layout
    }

    #[inline]
    pub fn channel_at(&self, x: usize, y: usize) -> Channel {
        self.layout[(y % self.tile_height) * self.tile_width + (x % self.tile_width)]
    }

    /// Distinct channels in first-appearance order.
    pub fn channels(&self) -> Vec<Channel> {
        let mut out = Vec::new();
        for &c in &self.layout {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    pub fn contains(&self, channel: Channel) -> bool {
        self.layout.contains(&channel)
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.layout.iter().filter(|&&c| c == channel).count()
    }

    pub fn is_bayer(&self) -> bool {
        self.validate().kind == Some(CfaKind::Bayer)
    }

    pub fn is_rgbw(&self) -> bool {
        self.validate().kind == Some(CfaKind::Rgbw)
    }

    pub(crate) fn require_bayer(&self) -> Result<()> {
        if self.is_bayer() {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch {
                expected: "a 2x2 Bayer descriptor".into(),
                found: self.name.clone(),
            })
        }
    }

    pub(crate) fn require_rgbw(&self) -> Result<()> {
        if self.is_rgbw() {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch {
                expected: "an RGBW descriptor".into(),
                found: self.name.clone(),
            })
        }
    }

    /// True when W sites are exactly the pixels with `(x + y)` of one parity.
    pub fn white_is_quincunx(&self) -> bool {
        if self.tile_width % 2 != 0 || self.tile_height % 2 != 0 {
            return false;
        }
        let parity_of_w = match self
            .layout
            .iter()
            .position(|&c| c == Channel::W)
        {
            Some(i) => (i % self.tile_width + i / self.tile_width) % 2,
            None => return false,
        };
        (0..self.tile_height).all(|y| {
            (0..self.tile_width)
                .all(|x| (self.channel_at(x, y) == Channel::W) == ((x + y) % 2 == parity_of_w))
        })
    }

    /// Checks the descriptor against the family rules and names every violation.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |rule: &'static str, detail: String| violations.push(Violation { rule, detail });

        let kind = if self.contains(Channel::W) {
            let whites = self.count(Channel::W);
            if 2 * whites != self.layout.len() {
                push(
                    "rgbw-white-half",
                    format!("W occupies {whites} of {} sites", self.layout.len()),
                );
            }
            if !self.white_is_quincunx() {
                push("rgbw-quincunx", "W sites do not form a checkerboard".into());
            }
            for c in [Channel::R, Channel::G, Channel::B] {
                if !self.contains(c) {
                    push("rgbw-colors", format!("channel {c} never appears"));
                }
            }
            CfaKind::Rgbw
        } else {
            if self.tile_width != 2 || self.tile_height != 2 {
                push(
                    "bayer-shape",
                    format!("Bayer tile must be 2x2, got {}x{}", self.tile_width, self.tile_height),
                );
            }
            let (r, g, b) = (
                self.count(Channel::R),
                self.count(Channel::G),
                self.count(Channel::B),
            );
            if (r, g, b) != (1, 2, 1) {
                push(
                    "bayer-multiset",
                    format!("expected {{R, G, G, B}}, got R={r} G={g} B={b}"),
                );
            }
            CfaKind::Bayer
        };

        ValidationReport {
            name: self.name.clone(),
            kind: violations.is_empty().then_some(kind),
            violations,
        }
    }

    /// Bayer tile produced by diagonal binning: one entry per 2x2 sub-block,
    /// holding the color found on the non-white diagonal.
    pub fn binned_bayer(&self) -> Result<CfaDescriptor> {
        let shape_err = |reason: String| Error::InvalidDescriptor {
            name: self.name.clone(),
            reason,
        };
        if self.tile_width % 2 != 0 || self.tile_height % 2 != 0 {
            return Err(shape_err("tile dimensions must be even for diagonal binning".into()));
        }
        let (bw, bh) = (self.tile_width / 2, self.tile_height / 2);
        let mut layout = Vec::with_capacity(bw * bh);
        for by in 0..bh {
            for bx in 0..bw {
                let (x, y) = (2 * bx, 2 * by);
                let main = (self.channel_at(x, y), self.channel_at(x + 1, y + 1));
                let anti = (self.channel_at(x + 1, y), self.channel_at(x, y + 1));
                let color = match (main, anti) {
                    ((Channel::W, Channel::W), (a, b)) if a == b && a != Channel::W => a,
                    ((a, b), (Channel::W, Channel::W)) if a == b && a != Channel::W => a,
                    _ => {
                        return Err(shape_err(format!(
                            "2x2 block at ({x},{y}) does not hold a W diagonal and an equal-color diagonal"
                        )))
                    }
                };
                layout.push(color);
            }
        }
        let provisional = CfaDescriptor::new(format!("{}-binned", self.name), bw, bh, layout)?;
        provisional.require_bayer().map_err(|_| {
            shape_err("binned sub-block colors do not form a Bayer tile".into())
        })?;
        Ok(CfaRegistry::builtin()
            .iter()
            .find(|d| d.tile_width == bw && d.tile_height == bh && d.layout == provisional.layout)
            .cloned()
            .unwrap_or(provisional))
    }
}

impl fmt::Display for CfaDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [", self.name)?;
        for (i, row) in self.layout.chunks(self.tile_width).enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            for c in row {
                write!(f, "{c}")?;
            }
        }
        f.write_str("]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub name: String,
    /// Set only when validation passed.
    pub kind: Option<CfaKind>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Some(kind) => write!(f, "{}: pass ({kind:?})", self.name),
            None => {
                write!(f, "{}: fail", self.name)?;
                for v in &self.violations {
                    write!(f, "\n  [{}] {}", v.rule, v.detail)?;
                }
                Ok(())
            }
        }
    }
}

/// Name → descriptor lookup used when decoding raw files.
#[derive(Clone, Debug)]
pub struct CfaRegistry {
    map: BTreeMap<String, CfaDescriptor>,
}

impl CfaRegistry {
    pub fn builtin() -> Self {
        let mut map = BTreeMap::new();
        for d in [
            CfaDescriptor::rgbw_default(),
            CfaDescriptor::rggb(),
            CfaDescriptor::bggr(),
            CfaDescriptor::grbg(),
            CfaDescriptor::gbrg(),
        ] {
            map.insert(d.name.clone(), d);
        }
        CfaRegistry { map }
    }

    pub fn insert(&mut self, cfa: CfaDescriptor) {
        self.map.insert(cfa.name.clone(), cfa);
    }

    pub fn get(&self, name: &str) -> Result<&CfaDescriptor> {
        self.map
            .get(name)
            .ok_or_else(|| Error::UnknownCfa(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &CfaDescriptor> {
        self.map.values()
    }
}

impl Default for CfaRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl FromStr for CfaDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CfaRegistry::builtin().get(s).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Channel::*;

    #[test]
    fn default_rgbw_lookups() {
        let cfa = CfaDescriptor::rgbw_default();
        assert_eq!(cfa.channel_at(0, 0), W);
        assert_eq!(cfa.channel_at(1, 0), R);
        assert_eq!(cfa.channel_at(3, 3), W);
        assert_eq!(cfa.channel_at(2, 3), B);
    }

    #[test]
    fn rggb_lookup_matches_brute_force_tiling() {
        let cfa = CfaDescriptor::rggb();
        // Explicitly tiled 4x4 RGGB frame.
        let tiled = [[R, G, R, G], [G, B, G, B], [R, G, R, G], [G, B, G, B]];
        for (y, row) in tiled.iter().enumerate() {
            for (x, &c) in row.iter().enumerate() {
                assert_eq!(cfa.channel_at(x, y), c);
            }
        }
        assert_eq!(cfa.channel_at(3, 2), G);
    }

    #[test]
    fn tiling_is_periodic_over_three_tiles() {
        for cfa in CfaRegistry::builtin().iter() {
            let (tw, th) = (cfa.tile_width(), cfa.tile_height());
            for y in 0..3 * th {
                for x in 0..3 * tw {
                    assert_eq!(cfa.channel_at(x + tw, y), cfa.channel_at(x, y));
                    assert_eq!(cfa.channel_at(x, y + th), cfa.channel_at(x, y));
                }
            }
        }
    }

    #[test]
    fn validation_verdicts() {
        let rgbw = CfaDescriptor::rgbw_default().validate();
        assert!(rgbw.passed());
        assert_eq!(rgbw.kind, Some(CfaKind::Rgbw));

        let bayer = CfaDescriptor::rggb().validate();
        assert!(bayer.passed());
        assert_eq!(bayer.kind, Some(CfaKind::Bayer));

        let bad = CfaDescriptor::from_rows("rrgb", "RR/GB").unwrap().validate();
        assert!(!bad.passed());
        assert!(bad.violated("bayer-multiset"));
        assert_eq!(bad.kind, None);
    }

    #[test]
    fn rgbw_rule_violations_are_named() {
        // White in a column stripe instead of a checkerboard.
        let striped = CfaDescriptor::from_rows("striped", "WR/WG/WG/WB").unwrap().validate();
        assert!(striped.violated("rgbw-quincunx"));
        assert!(!striped.violated("rgbw-white-half"));

        let sparse = CfaDescriptor::from_rows("sparse", "WR/GB").unwrap().validate();
        assert!(sparse.violated("rgbw-white-half"));
    }

    #[test]
    fn default_rgbw_structure() {
        let cfa = CfaDescriptor::rgbw_default();
        assert_eq!(cfa.count(W), 8);
        assert!(cfa.white_is_quincunx());
        let binned = cfa.binned_bayer().unwrap();
        assert_eq!(binned, CfaDescriptor::rggb());
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(CfaDescriptor::new("x", 0, 2, vec![]).is_err());
        assert!(CfaDescriptor::new("x", 2, 2, vec![R, G, B]).is_err());
        assert!(CfaDescriptor::from_rows("x", "RG/G").is_err());
        assert!(CfaDescriptor::from_rows("x", "RQ/GB").is_err());
    }

    #[test]
    fn binning_rejects_non_diagonal_blocks() {
        let cfa = CfaDescriptor::from_rows("rows", "WW/RR").unwrap();
        assert!(cfa.binned_bayer().is_err());
    }

    #[test]
    fn registry_lookup() {
        let reg = CfaRegistry::builtin();
        assert_eq!(reg.get("rggb").unwrap(), &CfaDescriptor::rggb());
        assert!(matches!(reg.get("xtrans"), Err(Error::UnknownCfa(_))));
    }
}
