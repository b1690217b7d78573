//! Scaling scans, locality assumptions, entanglement-range estimates and the
//! CNN channel-count relation.
//!
//! # Finite-size verdict
//!
//! Area and volume law are asymptotic statements; a scan over a handful of
//! cuts on one small lattice needs a fixed rule:
//!
//! 1. every entropy is zero → `area` (degenerate);
//! 2. entropy is linear in the boundary length (`R² ≥ 0.99`) with positive
//!    slope and nonpositive intercept → `area`;
//! 3. mean entropy ≥ 0.8 × mean `min(n_a, n_b)` → `volume`;
//! 4. positive slope → `sub-volume`, otherwise `inconclusive`.
//!
//! [`combine_verdicts`] repeats the check across lattice sizes and only keeps
//! `area` when the slopes agree to within ±20%.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entanglement::{entanglement_entropy_with, EntropyOptions, EntropyReport};
use crate::error::{Error, Result};
use crate::lattice::{embed, restrict, Bipartition, Gather, ImageState, PixelSet};
use crate::linalg::{symmetric_eigenvalues, SymMatrix};
use crate::entanglement::SchmidtSpectrum;
use crate::statespace::TargetFunction;
use crate::tasks::{EdgeLattice, TaskSpec};

pub const AREA_MIN_R2: f64 = 0.99;
pub const VOLUME_FRACTION: f64 = 0.8;
pub const SLOPE_STABILITY: f64 = 0.2;
const ZERO_ENTROPY: f64 = 1e-9;

/// Largest number of distinct A-restrictions for coincidence matrices.
pub const MAX_COINCIDENCE_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutFamily {
    Vertical,
    Horizontal,
    SeededRandom { count: usize, seed: u64 },
}

impl std::str::FromStr for CutFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(CutFamily::Vertical),
            "horizontal" => Ok(CutFamily::Horizontal),
            "random" | "seeded-random" => Ok(CutFamily::SeededRandom { count: 10, seed: 0 }),
            other => Err(Error::InvalidArgument(format!(
                "unknown cut family {other:?} (expected vertical, horizontal or random)"
            ))),
        }
    }
}

/// How the boundary length of a cut is measured for fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMeasure {
    /// A-pixels adjacent to B (`L_AB`).
    Pixels,
    /// Loop-lattice vertices with incident edges on both sides.
    CutVertices,
}

#[derive(Clone, Debug)]
pub struct Cut {
    pub id: usize,
    pub label: String,
    pub part: Bipartition,
    pub boundary: usize,
}

/// Cuts of a task for one family.
///
/// On loop tasks the vertical and horizontal families sweep a vertex region
/// across the lattice (column by column or row by row) and take A as the
/// edges owned by that region; the boundary is the number of cut vertices.
/// Elsewhere they are `cols<K` and `rows<K`, measured in boundary pixels.
pub fn cut_family(task: &TaskSpec, family: CutFamily) -> Result<(BoundaryMeasure, Vec<Cut>)> {
    let geom = &task.geom;
    let mut masks: Vec<(String, PixelSet)> = Vec::new();
    match (family, task.edge_lattice) {
        (CutFamily::Vertical | CutFamily::Horizontal, Some(lat)) => {
            let order = lat.vertex_order(family == CutFamily::Vertical);
            for k in 1..order.len() {
                let mask = lat.owned_edges(&order[..k]);
                let tag = if family == CutFamily::Vertical { "vsweep" } else { "hsweep" };
                masks.push((format!("{tag}:{k}"), mask));
            }
        }
        (CutFamily::Vertical, None) => {
            for k in 1..geom.lx() {
                masks.push((format!("cols<{k}"), geom.columns_below(k)));
            }
        }
        (CutFamily::Horizontal, None) => {
            for k in 1..geom.ly() {
                masks.push((format!("rows<{k}"), geom.rows_below(k)));
            }
        }
        (CutFamily::SeededRandom { count, seed }, _) => {
            masks = random_masks(geom.n_pixels(), count, seed)
                .into_iter()
                .map(|m| (format!("mask:{:x}", m.0), m))
                .collect();
        }
    }
    let measure = if task.edge_lattice.is_some() {
        BoundaryMeasure::CutVertices
    } else {
        BoundaryMeasure::Pixels
    };
    let mut seen = std::collections::HashSet::new();
    let mut cuts = Vec::new();
    for (label, mask) in masks {
        if !seen.insert(mask) {
            continue;
        }
        let Ok(part) = Bipartition::new(geom, mask) else {
            continue;
        };
        let boundary = boundary_length(task.edge_lattice.as_ref(), &part);
        cuts.push(Cut {
            id: cuts.len(),
            label,
            part,
            boundary,
        });
    }
    Ok((measure, cuts))
}

fn boundary_length(lattice: Option<&EdgeLattice>, part: &Bipartition) -> usize {
    match lattice {
        Some(lat) => lat.cut_vertices(part.mask_a()),
        None => part.l_ab(),
    }
}

/// `count` distinct nonempty proper pixel subsets.
pub fn random_masks(n_pixels: usize, count: usize, seed: u64) -> Vec<PixelSet> {
    let full = PixelSet::full(n_pixels).0;
    let available = if n_pixels >= 64 {
        usize::MAX
    } else {
        ((1u128 << n_pixels) - 2).min(usize::MAX as u128) as usize
    };
    let want = count.min(available);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(want);
    while out.len() < want {
        let m = rng.random::<u64>() & full;
        if m != 0 && m != full && seen.insert(m) {
            out.push(PixelSet(m));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Scans

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub cut_id: usize,
    pub label: String,
    pub n_a: usize,
    pub n_b: usize,
    /// Boundary length in the scan's [`BoundaryMeasure`].
    pub l_ab: usize,
    pub entropy_bits: f64,
    pub rank: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Area,
    SubVolume,
    Volume,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Area => "area",
            Verdict::SubVolume => "sub-volume",
            Verdict::Volume => "volume",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub measure: BoundaryMeasure,
    pub rows: Vec<ScanRow>,
    pub fit: LinearFit,
    pub mean_entropy_bits: f64,
    pub mean_min_side: f64,
    pub verdict: Verdict,
}

impl ScanResult {
    /// `cut_id,n_a,n_b,l_ab,entropy_bits,rank`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cut_id,n_a,n_b,l_ab,entropy_bits,rank\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.12},{}",
                r.cut_id,
                r.n_a,
                r.n_b,
                r.l_ab,
                clean_zero(r.entropy_bits),
                r.rank
            );
        }
        out
    }

    /// Fit and verdict, for the JSON sidecar.
    pub fn summary(&self) -> ScanSummary<'_> {
        ScanSummary {
            measure: self.measure,
            cuts: self.rows.len(),
            fit: self.fit,
            mean_entropy_bits: self.mean_entropy_bits,
            mean_min_side: self.mean_min_side,
            verdict: self.verdict,
            labels: self.rows.iter().map(|r| r.label.as_str()).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary<'a> {
    pub measure: BoundaryMeasure,
    pub cuts: usize,
    pub fit: LinearFit,
    pub mean_entropy_bits: f64,
    pub mean_min_side: f64,
    pub verdict: Verdict,
    pub labels: Vec<&'a str>,
}

fn clean_zero(v: f64) -> f64 {
    if v.abs() < 5e-13 {
        0.0
    } else {
        v
    }
}

pub fn scan_cuts(task: &TaskSpec, family: CutFamily) -> Result<ScanResult> {
    scan_cuts_with(task, family, &EntropyOptions::default())
}

pub fn scan_cuts_with(task: &TaskSpec, family: CutFamily, opts: &EntropyOptions) -> Result<ScanResult> {
    let f = task.target_function()?;
    let (measure, cuts) = cut_family(task, family)?;
    scan_function(&f, measure, &cuts, opts)
}

/// Entropy of `f` across every cut, then fit and verdict. Cuts run in
/// parallel; rows come back in cut order.
pub fn scan_function(
    f: &TargetFunction,
    measure: BoundaryMeasure,
    cuts: &[Cut],
    opts: &EntropyOptions,
) -> Result<ScanResult> {
    let distinct = {
        let mut b: Vec<usize> = cuts.iter().map(|c| c.boundary).collect();
        b.sort_unstable();
        b.dedup();
        b.len()
    };
    if cuts.len() < 3 || distinct < 2 {
        return Err(Error::TooFewCuts {
            cuts: cuts.len(),
            distinct,
        });
    }
    let reports: Vec<EntropyReport> = cuts
        .par_iter()
        .map(|c| entanglement_entropy_with(f, &c.part, opts))
        .collect::<Result<_>>()?;
    let rows: Vec<ScanRow> = cuts
        .iter()
        .zip(&reports)
        .map(|(c, r)| ScanRow {
            cut_id: c.id,
            label: c.label.clone(),
            n_a: c.part.n_a(),
            n_b: c.part.n_b(),
            l_ab: c.boundary,
            entropy_bits: r.entropy_bits,
            rank: r.rank(),
        })
        .collect();
    Ok(summarize(measure, rows))
}

pub fn summarize(measure: BoundaryMeasure, rows: Vec<ScanRow>) -> ScanResult {
    let xs: Vec<f64> = rows.iter().map(|r| r.l_ab as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.entropy_bits).collect();
    let fit = least_squares(&xs, &ys);
    let count = rows.len().max(1) as f64;
    let mean_entropy_bits = ys.iter().sum::<f64>() / count;
    let mean_min_side = rows.iter().map(|r| r.n_a.min(r.n_b) as f64).sum::<f64>() / count;
    let all_zero = ys.iter().all(|&y| y <= ZERO_ENTROPY);
    let linear = fit.r_squared >= AREA_MIN_R2 && fit.slope > 0.0 && fit.intercept <= ZERO_ENTROPY;
    let verdict = if all_zero || linear {
        Verdict::Area
    } else if mean_entropy_bits >= VOLUME_FRACTION * mean_min_side {
        Verdict::Volume
    } else if fit.slope > 0.0 {
        Verdict::SubVolume
    } else {
        Verdict::Inconclusive
    };
    ScanResult {
        measure,
        rows,
        fit,
        mean_entropy_bits,
        mean_min_side,
        verdict,
    }
}

/// Ordinary least squares `y = slope x + intercept`. A constant `y` gets
/// `R² = 1`; a constant `x` gets slope 0.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return LinearFit {
            slope: 0.0,
            intercept: 0.0,
            r_squared: 0.0,
        };
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy <= 1e-24 { 1.0 } else { 1.0 - ss_res / syy };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Verdict across scans at increasing lattice size.
pub fn combine_verdicts(scans: &[ScanResult]) -> Verdict {
    let Some(first) = scans.first() else {
        return Verdict::Inconclusive;
    };
    if scans.iter().all(|s| s.verdict == Verdict::Area) {
        let base = first.fit.slope;
        let stable = scans.iter().all(|s| {
            if base.abs() <= ZERO_ENTROPY {
                s.fit.slope.abs() <= ZERO_ENTROPY
            } else {
                ((s.fit.slope - base) / base).abs() <= SLOPE_STABILITY
            }
        });
        return if stable { Verdict::Area } else { Verdict::SubVolume };
    }
    if scans.iter().all(|s| s.verdict == Verdict::Volume) {
        return Verdict::Volume;
    }
    if scans.iter().any(|s| s.fit.slope > 0.0) {
        Verdict::SubVolume
    } else {
        Verdict::Inconclusive
    }
}

/// Fit of entropy against boundary length pooled across several scans.
pub fn pooled_fit(scans: &[ScanResult]) -> LinearFit {
    let xs: Vec<f64> = scans.iter().flat_map(|s| s.rows.iter().map(|r| r.l_ab as f64)).collect();
    let ys: Vec<f64> = scans.iter().flat_map(|s| s.rows.iter().map(|r| r.entropy_bits)).collect();
    least_squares(&xs, &ys)
}

// ---------------------------------------------------------------------------
// Coincidence counts

/// `N_{s_A s'_A}`: how many B-restrictions complete both A-restrictions to
/// label-1 images.
#[derive(Clone, Debug)]
pub struct CoincidenceCounts {
    /// Distinct A-restrictions (packed) in ascending order.
    patterns: Vec<u64>,
    counts: Vec<u32>,
    n_label1: usize,
    mask_a: PixelSet,
}

impl CoincidenceCounts {
    pub fn dim(&self) -> usize {
        self.patterns.len()
    }

    pub fn patterns(&self) -> &[u64] {
        &self.patterns
    }

    /// Count by pattern index.
    pub fn at(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.patterns.len() + j]
    }

    /// Count by packed A-restriction; zero when either never occurs.
    pub fn get(&self, a: u64, a_prime: u64) -> u32 {
        match (self.patterns.binary_search(&a), self.patterns.binary_search(&a_prime)) {
            (Ok(i), Ok(j)) => self.at(i, j),
            _ => 0,
        }
    }

    /// A-restriction `i` scattered back onto the lattice.
    pub fn pattern_image(&self, i: usize) -> ImageState {
        embed(self.patterns[i], self.mask_a)
    }

    /// Nonzero entries `(i, j, count)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let p = self.patterns.len();
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(k, &c)| (k / p, k % p, c))
    }

    /// Spectrum of `Σ N_{s_A s'_A} / N_I |s_A⟩⟨s'_A|`.
    pub fn density_spectrum(&self) -> SchmidtSpectrum {
        let p = self.patterns.len();
        let norm = self.n_label1 as f64;
        let data = self.counts.iter().map(|&c| f64::from(c) / norm).collect();
        let m = SymMatrix::from_row_major(p, data);
        SchmidtSpectrum::from_eigenvalues(symmetric_eigenvalues(&m))
    }
}

pub fn coincidence_counts(task: &TaskSpec, part: &Bipartition) -> Result<CoincidenceCounts> {
    let ga = Gather::new(part.mask_a());
    let gb = Gather::new(part.mask_b());
    let mut pairs: Vec<(u64, u64)> = task
        .label1()
        .iter()
        .map(|&s| (gb.apply(s), ga.apply(s)))
        .collect();
    let mut patterns: Vec<u64> = pairs.iter().map(|p| p.1).collect();
    patterns.sort_unstable();
    patterns.dedup();
    let p = patterns.len();
    if p > MAX_COINCIDENCE_DIM {
        return Err(Error::SizeExceeded {
            what: "distinct A-restrictions",
            size: p as u64,
            limit: MAX_COINCIDENCE_DIM as u64,
        });
    }
    pairs.sort_unstable();
    let mut counts = vec![0u32; p * p];
    let mut group: Vec<usize> = Vec::new();
    for chunk in pairs.chunk_by(|x, y| x.0 == y.0) {
        group.clear();
        group.extend(chunk.iter().map(|&(_, a)| patterns.binary_search(&a).expect("present")));
        for &i in &group {
            for &j in &group {
                counts[i * p + j] += 1;
            }
        }
    }
    Ok(CoincidenceCounts {
        patterns,
        counts,
        n_label1: task.label1().len(),
        mask_a: part.mask_a(),
    })
}

// ---------------------------------------------------------------------------
// Assumptions and range

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Counterexample {
    /// Two label-1 images equal on B but different on the boundary.
    SameBDifferentBoundary { first: String, second: String },
    /// Two A-restriction pairs in the same class pair with different counts.
    CountDependsOnInterior {
        width: usize,
        pair: (String, String),
        count: u32,
        other_pair: (String, String),
        other_count: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assumption1Check {
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
}

/// Images that agree on B must agree on the boundary.
pub fn check_assumption1(task: &TaskSpec, part: &Bipartition) -> Assumption1Check {
    let gb = Gather::new(part.mask_b());
    let boundary = part.boundary();
    let mut first_by_b: HashMap<u64, ImageState> = HashMap::new();
    for &s in task.label1() {
        let b = gb.apply(s);
        match first_by_b.get(&b) {
            Some(&t) if restrict(s, boundary) != restrict(t, boundary) => {
                return Assumption1Check {
                    pass: false,
                    counterexample: Some(Counterexample::SameBDifferentBoundary {
                        first: format!("{t}"),
                        second: format!("{s}"),
                    }),
                };
            }
            Some(_) => {}
            None => {
                first_by_b.insert(b, s);
            }
        }
    }
    Assumption1Check {
        pass: true,
        counterexample: None,
    }
}

/// Outcome of the shell-width check at one `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assumption2Check {
    pub width: usize,
    pub pass: bool,
    /// Distinct shell patterns among occurring A-restrictions.
    pub classes: usize,
    pub counterexample: Option<Counterexample>,
}

/// Counts must be constant over every pair of shell classes (exact equality).
pub fn check_assumption2(counts: &CoincidenceCounts, part: &Bipartition, width: usize) -> Assumption2Check {
    let shell = part.region_r(width).pixels;
    let p = counts.dim();
    let mut class_of_key: HashMap<u64, usize> = HashMap::new();
    let class: Vec<usize> = (0..p)
        .map(|i| {
            let key = restrict(counts.pattern_image(i), shell);
            let next = class_of_key.len();
            *class_of_key.entry(key).or_insert(next)
        })
        .collect();
    let c = class_of_key.len();
    // representative (i, j) per class pair
    let mut rep: Vec<Option<(usize, usize)>> = vec![None; c * c];
    for i in 0..p {
        for j in 0..p {
            let slot = &mut rep[class[i] * c + class[j]];
            match *slot {
                None => *slot = Some((i, j)),
                Some((ri, rj)) => {
                    if counts.at(ri, rj) != counts.at(i, j) {
                        let hex = |k: usize| format!("{}", counts.pattern_image(k));
                        return Assumption2Check {
                            width,
                            pass: false,
                            classes: c,
                            counterexample: Some(Counterexample::CountDependsOnInterior {
                                width,
                                pair: (hex(i), hex(j)),
                                count: counts.at(i, j),
                                other_pair: (hex(ri), hex(rj)),
                                other_count: counts.at(ri, rj),
                            }),
                        };
                    }
                }
            }
        }
    }
    Assumption2Check {
        width,
        pass: true,
        classes: c,
        counterexample: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RangeEstimate {
    /// Smallest passing shell width, `None` when nothing up to `r_max` passes.
    pub r_star: Option<usize>,
    pub r_max: usize,
    pub assumption1_pass: bool,
    pub l_ab: usize,
    /// `r_star · l_ab`.
    pub bound_bits: Option<f64>,
    /// Shell classes at `r_star`; `log2` of this also bounds the entropy.
    pub classes: Option<usize>,
    pub entropy_bits: f64,
    pub bound_holds: Option<bool>,
    pub counterexample: Option<Counterexample>,
}

pub fn estimate_range(task: &TaskSpec, part: &Bipartition, r_max: usize) -> Result<RangeEstimate> {
    if r_max == 0 {
        return Err(Error::InvalidArgument("r_max must be at least 1".into()));
    }
    let f = task.target_function()?;
    let entropy_bits = entanglement_entropy_with(&f, part, &EntropyOptions::default())?.entropy_bits;
    let a1 = check_assumption1(task, part);
    let counts = coincidence_counts(task, part)?;
    let mut last_failure = None;
    let mut found = None;
    for r in 1..=r_max {
        let check = check_assumption2(&counts, part, r);
        if check.pass {
            found = Some(check);
            break;
        }
        last_failure = check.counterexample;
    }
    let l_ab = part.l_ab();
    let (r_star, classes, bound_bits, bound_holds, counterexample) = match found {
        Some(c) => {
            let bound = (c.width * l_ab) as f64;
            (
                Some(c.width),
                Some(c.classes),
                Some(bound),
                Some(entropy_bits <= bound + 1e-9),
                a1.counterexample.clone(),
            )
        }
        None => (None, None, None, None, last_failure.or(a1.counterexample.clone())),
    };
    Ok(RangeEstimate {
        r_star,
        r_max,
        assumption1_pass: a1.pass,
        l_ab,
        bound_bits,
        classes,
        entropy_bits,
        bound_holds,
        counterexample,
    })
}

// ---------------------------------------------------------------------------
// CNN capacity

pub const POOLING_NOTE: &str =
    "pooling depth n_p grows like log L for scale-invariant tasks; not computed";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelRequirement {
    pub r_bits: f64,
    pub n_c: u32,
    /// Channels per layer: smallest `D` with `n_c log2 D ≥ r`.
    pub d: u64,
    /// Single-layer requirement `ceil(2^r)`.
    pub d0: u64,
    /// `ceil(D0^(1/n_c))`.
    pub d_from_d0: u64,
    /// `d` and `d_from_d0` differ by at most one.
    pub consistent: bool,
}

/// Channel count a CNN with `n_c` convolution layers per pooling stage needs
/// for a target whose entropy grows as `r_bits` per boundary pixel, using
/// `S/L ≈ n_c log2 D` with unit constant.
pub fn cnn_channel_requirement(r_bits: f64, n_c: u32) -> Result<ChannelRequirement> {
    if !(r_bits.is_finite() && r_bits >= 0.0) {
        return Err(Error::InvalidArgument(format!("r must be finite and nonnegative, got {r_bits}")));
    }
    if n_c == 0 {
        return Err(Error::InvalidArgument("n_c must be at least 1".into()));
    }
    if r_bits > 62.0 {
        return Err(Error::InvalidArgument(format!("r = {r_bits} bits overflows the channel count")));
    }
    let d = ceil_pow2(r_bits / f64::from(n_c));
    let d0 = ceil_pow2(r_bits);
    let d_from_d0 = ceil_root(d0, n_c);
    Ok(ChannelRequirement {
        r_bits,
        n_c,
        d,
        d0,
        d_from_d0,
        consistent: d.abs_diff(d_from_d0) <= 1,
    })
}

/// `ceil(2^e)`, exact when `e` is an integer.
fn ceil_pow2(e: f64) -> u64 {
    let rounded = e.round();
    if (e - rounded).abs() < 1e-12 {
        1u64 << (rounded as u32)
    } else {
        e.exp2().ceil() as u64
    }
}

/// Smallest `x` with `x^n ≥ v`.
fn ceil_root(v: u64, n: u32) -> u64 {
    if v <= 1 {
        return 1;
    }
    let reaches = |x: u64| x.checked_pow(n).is_none_or(|p| p >= v);
    let mut x = (v as f64).powf(1.0 / f64::from(n)).ceil().max(1.0) as u64;
    while x > 1 && reaches(x - 1) {
        x -= 1;
    }
    while !reaches(x) {
        x += 1;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{entanglement_entropy, von_neumann_entropy, EntropyBase};
    use crate::lattice::LatticeGeometry;
    use crate::tasks::{gen_closed_loops, gen_parity, gen_product_set, gen_random_set, gen_single, Provenance};

    fn geom(lx: usize, ly: usize) -> LatticeGeometry {
        LatticeGeometry::new(lx, ly, false).unwrap()
    }

    fn task(g: &LatticeGeometry, imgs: &[u64]) -> TaskSpec {
        TaskSpec::new(
            "t",
            g.clone(),
            imgs.iter().copied().map(ImageState).collect(),
            Provenance::default(),
        )
        .unwrap()
    }

    #[test]
    fn fit_basics() {
        let f = least_squares(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let f = least_squares(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]);
        assert_eq!((f.slope, f.intercept, f.r_squared), (0.0, 0.0, 1.0));
    }

    #[test]
    fn product_scan_is_degenerate_area() {
        let g = geom(4, 3);
        let t = gen_product_set(&g, 12, 5).unwrap();
        let s = scan_cuts(&t, CutFamily::SeededRandom { count: 12, seed: 1 }).unwrap();
        assert!(s.rows.iter().all(|r| r.entropy_bits < 1e-9));
        assert_eq!(s.fit.slope, 0.0);
        assert_eq!(s.verdict, Verdict::Area);
    }

    #[test]
    fn too_few_cuts() {
        let g = geom(4, 3);
        let t = gen_parity(&g, true).unwrap();
        // three vertical cuts, all with l_ab = 3
        assert_eq!(
            scan_cuts(&t, CutFamily::Vertical).unwrap_err(),
            Error::TooFewCuts { cuts: 3, distinct: 1 }
        );
        let g = geom(2, 2);
        let t = gen_parity(&g, true).unwrap();
        assert!(matches!(
            scan_cuts(&t, CutFamily::Vertical),
            Err(Error::TooFewCuts { cuts: 1, .. })
        ));
    }

    #[test]
    fn loop_k3_vertical_scan() {
        let t = gen_closed_loops(3, true).unwrap();
        let s = scan_cuts(&t, CutFamily::Vertical).unwrap();
        assert_eq!(s.measure, BoundaryMeasure::CutVertices);
        assert_eq!(s.rows.len(), 8);
        for r in &s.rows {
            assert!((r.entropy_bits - (r.l_ab as f64 - 1.0)).abs() < 1e-9, "{r:?}");
        }
        assert!((s.fit.slope - 1.0).abs() < 1e-9);
        assert!((s.fit.intercept + 1.0).abs() < 1e-9);
        assert_eq!(s.verdict, Verdict::Area);
    }

    #[test]
    fn random_set_scan_volume() {
        // 1/8 filling keeps the mean component small enough for volume scaling.
        let g = geom(4, 3);
        let t = gen_random_set(&g, 512, 3).unwrap();
        let s = scan_cuts(&t, CutFamily::SeededRandom { count: 16, seed: 2 }).unwrap();
        assert!(s.mean_entropy_bits >= 0.8 * s.mean_min_side, "{s:?}");
        assert_eq!(s.verdict, Verdict::Volume);
    }

    #[test]
    fn combine() {
        let k2 = scan_cuts(&gen_closed_loops(2, true).unwrap(), CutFamily::Vertical).unwrap();
        let k3 = scan_cuts(&gen_closed_loops(3, true).unwrap(), CutFamily::Vertical).unwrap();
        assert_eq!(combine_verdicts(&[k2.clone(), k3.clone()]), Verdict::Area);
        let pooled = pooled_fit(&[k2, k3]);
        assert!((pooled.slope - 1.0).abs() < 1e-9);
        assert_eq!(combine_verdicts(&[]), Verdict::Inconclusive);
    }

    #[test]
    fn csv_format() {
        let t = gen_closed_loops(2, true).unwrap();
        let s = scan_cuts(&t, CutFamily::Vertical).unwrap();
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("cut_id,n_a,n_b,l_ab,entropy_bits,rank"));
        assert_eq!(lines.next(), Some("0,2,6,3,2.000000000000,4"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn coincidence_examples() {
        let g = geom(3, 3);
        let single = task(&g, &[0b100_010_001]);
        let part = Bipartition::new(&g, g.columns_below(1)).unwrap();
        let c = coincidence_counts(&single, &part).unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c.at(0, 0), 1);

        let g = geom(2, 1);
        let parity = gen_parity(&g, true).unwrap();
        let part = Bipartition::new(&g, PixelSet(1)).unwrap();
        let c = coincidence_counts(&parity, &part).unwrap();
        assert_eq!(c.get(0, 0), 1);
        assert_eq!(c.get(1, 1), 1);
        assert_eq!(c.get(0, 1), 0);
        assert_eq!(c.get(1, 0), 0);
    }

    /// Pair counts by direct enumeration over B-patterns.
    fn naive_count(t: &TaskSpec, part: &Bipartition, a: u64, a2: u64) -> u32 {
        let set: std::collections::HashSet<u64> = t.label1().iter().map(|s| s.0).collect();
        (0..1u64 << part.n_b())
            .filter(|&b| {
                let bimg = embed(b, part.mask_b()).0;
                set.contains(&(embed(a, part.mask_a()).0 | bimg))
                    && set.contains(&(embed(a2, part.mask_a()).0 | bimg))
            })
            .count() as u32
    }

    #[test]
    fn coincidence_matches_enumeration_and_rho() {
        let t = gen_closed_loops(2, true).unwrap();
        let f = t.target_function().unwrap();
        for mask in [0b1u64, 0b11, 0b1010_0101, 0b0110_0011] {
            let part = Bipartition::new(&t.geom, PixelSet(mask)).unwrap();
            let c = coincidence_counts(&t, &part).unwrap();
            for (i, &a) in c.patterns().iter().enumerate() {
                for (j, &b) in c.patterns().iter().enumerate() {
                    assert_eq!(c.at(i, j), naive_count(&t, &part, a, b));
                }
            }
            let rho = crate::entanglement::reduced_density_matrix(&f, &part).unwrap();
            for (i, j, n) in c.nonzero() {
                let want = f64::from(n) / t.label1().len() as f64;
                assert!((rho.get(c.patterns()[i] as usize, c.patterns()[j] as usize) - want).abs() < 1e-12);
            }
            let s1 = von_neumann_entropy(&c.density_spectrum(), EntropyBase::Bits).unwrap();
            let s2 = entanglement_entropy(&f, &part).unwrap().entropy_bits;
            assert!((s1 - s2).abs() < 1e-9);
        }
    }

    #[test]
    fn assumption1_examples() {
        let g = geom(3, 3);
        let part = Bipartition::new(&g, g.columns_below(1)).unwrap();
        assert!(check_assumption1(&task(&g, &[0b011_010_110]), &part).pass);

        let g = geom(2, 1);
        let part = Bipartition::new(&g, PixelSet(0b01)).unwrap();
        let check = check_assumption1(&task(&g, &[0b10, 0b11]), &part);
        assert!(!check.pass);
        assert_eq!(
            check.counterexample,
            Some(Counterexample::SameBDifferentBoundary {
                first: "2".into(),
                second: "3".into()
            })
        );
        // differing B-restrictions never violate it
        assert!(check_assumption1(&task(&g, &[0b01, 0b11]), &part).pass);
    }

    #[test]
    fn loops_break_assumption1() {
        let t = gen_closed_loops(2, true).unwrap();
        for k in 1..t.geom.lx() {
            let part = Bipartition::new(&t.geom, t.geom.columns_below(k)).unwrap();
            assert!(!check_assumption1(&t, &part).pass);
        }
        for k in 1..t.geom.ly() {
            let part = Bipartition::new(&t.geom, t.geom.rows_below(k)).unwrap();
            assert!(!check_assumption1(&t, &part).pass, "rows<{k}");
        }
    }

    #[test]
    fn range_single_and_parity() {
        let g = geom(4, 3);
        let single = gen_single(&g, ImageState(0x5a3)).unwrap();
        for spec in [g.columns_below(1), g.columns_below(2), g.rows_below(1)] {
            let part = Bipartition::new(&g, spec).unwrap();
            let r = estimate_range(&single, &part, 3).unwrap();
            assert_eq!(r.r_star, Some(1));
            assert_eq!(r.entropy_bits, 0.0);
            assert_eq!(r.bound_holds, Some(true));
        }
        let parity = gen_parity(&g, true).unwrap();
        let part = Bipartition::new(&g, g.columns_below(1)).unwrap();
        let r = estimate_range(&parity, &part, 3).unwrap();
        assert_eq!(r.r_star, Some(1));
        assert!((r.entropy_bits - 1.0).abs() < 1e-9);
        assert_eq!(r.bound_bits, Some(3.0));
        // Counts follow the parity of all of A, so the shell must cover A.
        let part = Bipartition::new(&g, g.columns_below(2)).unwrap();
        let r = estimate_range(&parity, &part, 3).unwrap();
        assert_eq!(r.r_star, Some(part.max_depth()));
        assert_eq!(r.r_star, Some(2));
    }

    #[test]
    fn range_dense_random_fails_below_width() {
        let g = geom(4, 3);
        let t = gen_random_set(&g, 2048, 9).unwrap();
        let part = Bipartition::new(&g, g.columns_below(2)).unwrap();
        let r = estimate_range(&t, &part, 1).unwrap();
        assert_eq!(r.r_star, None);
        assert!(matches!(r.counterexample, Some(Counterexample::CountDependsOnInterior { .. })));
        assert!(estimate_range(&t, &part, 0).is_err());
    }

    #[test]
    fn assumption2_is_monotone() {
        let g = geom(4, 3);
        for seed in 0..6 {
            let t = gen_random_set(&g, 6 + seed * 10, seed).unwrap();
            let part = Bipartition::new(&g, PixelSet(0b0000_0111_0111)).unwrap();
            let c = coincidence_counts(&t, &part).unwrap();
            let passes: Vec<bool> = (1..=4).map(|r| check_assumption2(&c, &part, r).pass).collect();
            for w in passes.windows(2) {
                assert!(!w[0] || w[1]);
            }
            assert!(passes[part.max_depth() - 1]);
        }
    }

    #[test]
    fn capacity_examples() {
        let c = cnn_channel_requirement(4.0, 1).unwrap();
        assert_eq!((c.d, c.d0, c.d_from_d0), (16, 16, 16));
        assert_eq!(cnn_channel_requirement(4.0, 2).unwrap().d, 4);
        assert_eq!(cnn_channel_requirement(4.0, 4).unwrap().d, 2);
        for nc in 1..=8 {
            assert_eq!(cnn_channel_requirement(0.0, nc).unwrap().d, 1);
        }
        let c = cnn_channel_requirement(4.0, 3).unwrap();
        assert_eq!(c.d, 3); // 2^(4/3) = 2.52
        assert!(c.consistent);
        assert!(cnn_channel_requirement(-1.0, 1).is_err());
        assert!(cnn_channel_requirement(1.0, 0).is_err());
        assert_eq!(ceil_root(17, 2), 5);
        assert_eq!(ceil_root(16, 2), 4);
    }
}
