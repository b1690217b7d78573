//! Pixel lattices, binary images and bipartitions.
//!
//! Pixels are indexed row-major, `i = y * lx + x`, and an image is a single
//! `u64` word whose bit `i` holds pixel `i`. This caps lattices at 64 pixels.
//! Adjacency is 4-neighbour, optionally wrapping in both directions.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of pixels an [`ImageState`] can hold.
pub const MAX_PIXELS: usize = 64;

/// A set of pixels stored as a bit mask over pixel indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PixelSet(pub u64);

impl PixelSet {
    pub const EMPTY: PixelSet = PixelSet(0);

    /// All pixels of an `n`-pixel lattice.
    pub fn full(n: usize) -> Self {
        PixelSet(low_mask(n))
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        PixelSet(indices.into_iter().fold(0u64, |m, i| m | (1u64 << i)))
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_subset(self, other: PixelSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Pixel indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }
}

impl std::ops::BitOr for PixelSet {
    type Output = PixelSet;
    fn bitor(self, rhs: Self) -> Self {
        PixelSet(self.0 | rhs.0)
    }
}

impl std::ops::BitAnd for PixelSet {
    type Output = PixelSet;
    fn bitand(self, rhs: Self) -> Self {
        PixelSet(self.0 & rhs.0)
    }
}

/// One binary image: bit `i` is the value of pixel `i`.
///
/// The derived ordering is the unsigned value of the word, which is the
/// canonical enumeration order of the basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageState(pub u64);

impl ImageState {
    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn pixel(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    pub fn fits(self, n: usize) -> bool {
        self.0 & !low_mask(n) == 0
    }
}

impl fmt::Display for ImageState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

#[inline]
pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Rectangular pixel lattice with 4-neighbour adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeGeometry {
    lx: usize,
    ly: usize,
    periodic: bool,
    neighbors: Vec<PixelSet>,
}

impl LatticeGeometry {
    pub fn new(lx: usize, ly: usize, periodic: bool) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::ZeroDim { lx, ly });
        }
        let n = lx.saturating_mul(ly);
        if n > MAX_PIXELS {
            return Err(Error::SizeExceeded {
                what: "pixel count",
                size: n as u64,
                limit: MAX_PIXELS as u64,
            });
        }
        let mut neighbors = vec![PixelSet::EMPTY; n];
        for y in 0..ly {
            for x in 0..lx {
                let i = y * lx + x;
                let mut nb = 0u64;
                let mut link = |xx: usize, yy: usize| {
                    let j = yy * lx + xx;
                    if j != i {
                        nb |= 1u64 << j;
                    }
                };
                if x + 1 < lx {
                    link(x + 1, y);
                } else if periodic {
                    link(0, y);
                }
                if x > 0 {
                    link(x - 1, y);
                } else if periodic {
                    link(lx - 1, y);
                }
                if y + 1 < ly {
                    link(x, y + 1);
                } else if periodic {
                    link(x, 0);
                }
                if y > 0 {
                    link(x, y - 1);
                } else if periodic {
                    link(x, ly - 1);
                }
                neighbors[i] = PixelSet(nb);
            }
        }
        Ok(Self {
            lx,
            ly,
            periodic,
            neighbors,
        })
    }

    #[inline]
    pub fn lx(&self) -> usize {
        self.lx
    }

    #[inline]
    pub fn ly(&self) -> usize {
        self.ly
    }

    #[inline]
    pub fn periodic(&self) -> bool {
        self.periodic
    }

    /// Number of pixels `N`.
    #[inline]
    pub fn n_pixels(&self) -> usize {
        self.lx * self.ly
    }

    pub fn all_pixels(&self) -> PixelSet {
        PixelSet::full(self.n_pixels())
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.lx && y < self.ly);
        y * self.lx + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.lx, i / self.lx)
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> PixelSet {
        self.neighbors[i]
    }

    /// Unordered adjacency edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_pixels() {
            for j in self.neighbors[i].iter().filter(|&j| j > i) {
                out.push((i, j));
            }
        }
        out
    }

    pub fn fits(&self, s: ImageState) -> bool {
        s.fits(self.n_pixels())
    }

    /// All `2^N` images in canonical order. Only sensible for small `N`.
    pub fn enumerate(&self) -> impl Iterator<Item = ImageState> {
        let n = self.n_pixels();
        assert!(n < 64, "cannot enumerate 2^64 images");
        (0..(1u64 << n)).map(ImageState)
    }

    /// A-mask of the first `k` columns.
    pub fn columns_below(&self, k: usize) -> PixelSet {
        PixelSet::from_indices(
            (0..self.ly).flat_map(|y| (0..k.min(self.lx)).map(move |x| y * self.lx + x)),
        )
    }

    /// A-mask of the first `k` rows.
    pub fn rows_below(&self, k: usize) -> PixelSet {
        PixelSet(low_mask(k.min(self.ly) * self.lx))
    }
}

/// Bits of `s` at `pixels`, packed in ascending pixel order.
pub fn restrict(s: ImageState, pixels: PixelSet) -> u64 {
    let mut out = 0u64;
    for (j, i) in pixels.iter().enumerate() {
        out |= ((s.0 >> i) & 1) << j;
    }
    out
}

/// Inverse of [`restrict`]: scatter a packed pattern back onto `pixels`.
pub fn embed(pattern: u64, pixels: PixelSet) -> ImageState {
    let mut out = 0u64;
    for (j, i) in pixels.iter().enumerate() {
        out |= ((pattern >> j) & 1) << i;
    }
    ImageState(out)
}

/// Table-driven [`restrict`] for a fixed pixel set, one lookup per byte.
#[derive(Clone, Debug)]
pub struct Gather {
    tables: Vec<(u32, u32, [u8; 256])>,
}

impl Gather {
    pub fn new(pixels: PixelSet) -> Self {
        let mut tables = Vec::new();
        let mut offset = 0u32;
        for byte in 0..8u32 {
            let m = ((pixels.0 >> (8 * byte)) & 0xff) as u8;
            if m == 0 {
                continue;
            }
            let mut table = [0u8; 256];
            for (v, slot) in table.iter_mut().enumerate() {
                let mut packed = 0u8;
                let mut j = 0;
                for b in 0..8 {
                    if (m >> b) & 1 == 1 {
                        packed |= (((v >> b) & 1) as u8) << j;
                        j += 1;
                    }
                }
                *slot = packed;
            }
            tables.push((8 * byte, offset, table));
            offset += m.count_ones();
        }
        Self { tables }
    }

    #[inline]
    pub fn apply(&self, s: ImageState) -> u64 {
        self.tables
            .iter()
            .fold(0u64, |acc, (shift, offset, table)| {
                acc | (u64::from(table[((s.0 >> shift) & 0xff) as usize]) << offset)
            })
    }
}

/// Split of the lattice into regions A and B; the boundary lives in A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    geom: LatticeGeometry,
    mask_a: PixelSet,
    boundary: PixelSet,
}

impl Bipartition {
    pub fn new(geom: &LatticeGeometry, mask_a: PixelSet) -> Result<Self> {
        let all = geom.all_pixels();
        if !mask_a.is_subset(all) {
            return Err(Error::OutOfRange {
                image: mask_a.0,
                n: geom.n_pixels(),
            });
        }
        if mask_a.is_empty() || mask_a == all {
            return Err(Error::EmptySide);
        }
        let mask_b = PixelSet(all.0 & !mask_a.0);
        let boundary = PixelSet::from_indices(
            mask_a
                .iter()
                .filter(|&i| !(geom.neighbors(i) & mask_b).is_empty()),
        );
        Ok(Self {
            geom: geom.clone(),
            mask_a,
            boundary,
        })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geom
    }

    #[inline]
    pub fn mask_a(&self) -> PixelSet {
        self.mask_a
    }

    #[inline]
    pub fn mask_b(&self) -> PixelSet {
        PixelSet(self.geom.all_pixels().0 & !self.mask_a.0)
    }

    #[inline]
    pub fn n_a(&self) -> usize {
        self.mask_a.len()
    }

    #[inline]
    pub fn n_b(&self) -> usize {
        self.geom.n_pixels() - self.n_a()
    }

    /// A-pixels with at least one B-neighbour.
    #[inline]
    pub fn boundary(&self) -> PixelSet {
        self.boundary
    }

    /// Boundary length `L_AB`, counted in pixels.
    #[inline]
    pub fn l_ab(&self) -> usize {
        self.boundary.len()
    }

    /// The same cut with A and B exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(&self.geom, self.mask_b()).expect("complement of a valid cut is valid")
    }

    /// Adjacency edges with one end in A and the other in B, as `(i, j)`, `i < j`.
    pub fn cut_edges(&self) -> Vec<(usize, usize)> {
        self.geom
            .edges()
            .into_iter()
            .filter(|&(i, j)| self.mask_a.contains(i) != self.mask_a.contains(j))
            .collect()
    }

    /// Depth of every A-pixel: graph distance to the nearest B-pixel, walking
    /// through A only. Entries for B-pixels are 0.
    pub fn depths(&self) -> Vec<usize> {
        let n = self.geom.n_pixels();
        let mut depth = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for i in self.mask_b().iter() {
            depth[i] = 0;
            queue.push_back(i);
        }
        while let Some(i) = queue.pop_front() {
            for j in self.geom.neighbors(i).iter() {
                if self.mask_a.contains(j) && depth[j] == usize::MAX {
                    depth[j] = depth[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        depth
    }

    /// Shell of A-pixels within `width` steps of B (`width = 1` is the boundary).
    pub fn region_r(&self, width: usize) -> RegionR {
        let pixels = PixelSet::from_indices(
            self.depths()
                .into_iter()
                .enumerate()
                .filter(|&(i, d)| self.mask_a.contains(i) && d <= width)
                .map(|(i, _)| i),
        );
        RegionR { width, pixels }
    }

    /// Largest A-pixel depth; `region_r` saturates at all of A from here on.
    pub fn max_depth(&self) -> usize {
        let depths = self.depths();
        self.mask_a.iter().map(|i| depths[i]).max().unwrap_or(0)
    }
}

/// Boundary shell of width `r` inside region A.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionR {
    pub width: usize,
    pub pixels: PixelSet,
}

/// Cut specification: `cols<K`, `rows<K` or `mask:<hex>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutSpec {
    ColsBelow(usize),
    RowsBelow(usize),
    Mask(u64),
}

impl CutSpec {
    pub fn mask(&self, geom: &LatticeGeometry) -> Result<PixelSet> {
        match *self {
            CutSpec::ColsBelow(k) if k == 0 || k >= geom.lx() => Err(Error::EmptySide),
            CutSpec::RowsBelow(k) if k == 0 || k >= geom.ly() => Err(Error::EmptySide),
            CutSpec::ColsBelow(k) => Ok(geom.columns_below(k)),
            CutSpec::RowsBelow(k) => Ok(geom.rows_below(k)),
            CutSpec::Mask(m) => Ok(PixelSet(m)),
        }
    }

    pub fn bipartition(&self, geom: &LatticeGeometry) -> Result<Bipartition> {
        Bipartition::new(geom, self.mask(geom)?)
    }
}

impl FromStr for CutSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::BadCutSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let s_trim = s.trim();
        if let Some(k) = s_trim.strip_prefix("cols<") {
            k.parse().map(CutSpec::ColsBelow).map_err(|_| bad("K must be a nonnegative integer"))
        } else if let Some(k) = s_trim.strip_prefix("rows<") {
            k.parse().map(CutSpec::RowsBelow).map_err(|_| bad("K must be a nonnegative integer"))
        } else if let Some(h) = s_trim.strip_prefix("mask:") {
            parse_hex_word(h).map(CutSpec::Mask).ok_or_else(|| bad("mask must be hex"))
        } else {
            Err(bad("unknown form"))
        }
    }
}

impl fmt::Display for CutSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutSpec::ColsBelow(k) => write!(f, "cols<{k}"),
            CutSpec::RowsBelow(k) => write!(f, "rows<{k}"),
            CutSpec::Mask(m) => write!(f, "mask:{m:x}"),
        }
    }
}

/// Parses a hex word, with or without a `0x` prefix.
pub fn parse_hex_word(s: &str) -> Option<u64> {
    let s = s.trim();
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .unwrap_or(s);
    if digits.is_empty() {
        return None;
    }
    u64::from_str_radix(digits, 16).ok()
}
