//! Reduced density matrices, Schmidt spectra and von Neumann entropy.
//!
//! Two independent routes compute the Schmidt spectrum of a bipartition:
//!
//! * the **dense** route performs the partial trace explicitly and
//!   diagonalizes the `2^{N_A} x 2^{N_A}` matrix `ρ^A`;
//! * the **sparse** route never touches `2^{N_A}`. It collects the distinct
//!   A- and B-restrictions present in the support into a coefficient matrix
//!   `C`, splits `C` into independent blocks (rows connected through shared
//!   columns), and diagonalizes the smaller Gram matrix of each block.
//!
//! Both return `λ_i = |a_i|^2`, the squared Schmidt coefficients.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Bipartition, Gather};
use crate::linalg::{symmetric_eigenvalues, SymMatrix};
use crate::statespace::TargetFunction;

/// Eigenvalues at or below this are exact zeros for rank and entropy.
pub const EIGEN_CUTOFF: f64 = 1e-12;
/// Largest side (in pixels) the dense route will materialize.
pub const DEFAULT_DENSE_PIXELS: usize = 13;
/// Largest Gram block the sparse route will diagonalize.
pub const DEFAULT_GRAM_DIM: usize = 4096;

const SPECTRUM_SUM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyBase {
    Bits,
    Nats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumPath {
    Dense,
    Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub dense_pixels: usize,
    pub gram_dim: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            dense_pixels: DEFAULT_DENSE_PIXELS,
            gram_dim: DEFAULT_GRAM_DIM,
        }
    }
}

/// Squared Schmidt coefficients in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Sorts descending and clamps round-off negatives to zero.
    pub fn from_eigenvalues(mut vals: Vec<f64>) -> Self {
        for v in vals.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        vals.sort_by(|a, b| b.total_cmp(a));
        Self { lambdas: vals }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Schmidt rank: eigenvalues above [`EIGEN_CUTOFF`].
    pub fn rank(&self) -> usize {
        self.lambdas.iter().take_while(|&&l| l > EIGEN_CUTOFF).count()
    }

    pub fn sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// `-Σ λ log λ` over eigenvalues above the cutoff.
pub fn von_neumann_entropy(spec: &SchmidtSpectrum, base: EntropyBase) -> Result<f64> {
    let sum = spec.sum();
    if !sum.is_finite() || (sum - 1.0).abs() > SPECTRUM_SUM_TOL {
        return Err(Error::BadSpectrum { sum });
    }
    let nats: f64 = spec
        .lambdas
        .iter()
        .filter(|&&l| l > EIGEN_CUTOFF)
        .map(|&l| -l * l.ln())
        .sum();
    let s = match base {
        EntropyBase::Nats => nats,
        EntropyBase::Bits => nats / std::f64::consts::LN_2,
    };
    Ok(s.max(0.0))
}

/// Spectrum of the unpartitioned density matrix `|f⟩⟨f|`: always `{⟨f|f⟩}`.
pub fn full_state_spectrum(f: &TargetFunction) -> SchmidtSpectrum {
    SchmidtSpectrum::from_eigenvalues(vec![f.norm_sqr()])
}

// ---------------------------------------------------------------------------
// Dense route

/// `ρ^A` as an explicit `2^{N_A} x 2^{N_A}` matrix indexed by packed A-patterns.
#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    n_a: usize,
    matrix: SymMatrix,
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn asymmetry(&self) -> f64 {
        self.matrix.asymmetry()
    }

    /// Raw eigenvalues, descending, not clamped.
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.matrix)
    }

    pub fn spectrum(&self) -> SchmidtSpectrum {
        SchmidtSpectrum::from_eigenvalues(self.eigenvalues())
    }
}

pub fn reduced_density_matrix(f: &TargetFunction, part: &Bipartition) -> Result<ReducedDensityMatrix> {
    reduced_density_matrix_capped(f, part, DEFAULT_DENSE_PIXELS)
}

/// Partial trace over B: `ρ^A[i][j] = Σ_b f(i⊗b) f(j⊗b)`.
pub fn reduced_density_matrix_capped(
    f: &TargetFunction,
    part: &Bipartition,
    max_pixels: usize,
) -> Result<ReducedDensityMatrix> {
    check_geometry(f, part)?;
    let n_a = part.n_a();
    if n_a > max_pixels {
        return Err(Error::DenseCapExceeded {
            n_a,
            cap: max_pixels,
        });
    }
    let dim = 1usize << n_a;
    let ga = Gather::new(part.mask_a());
    let gb = Gather::new(part.mask_b());
    let mut by_b: Vec<(u64, usize, f64)> = f
        .entries()
        .iter()
        .map(|&(s, amp)| (gb.apply(s), ga.apply(s) as usize, amp))
        .collect();
    by_b.sort_unstable_by_key(|x| (x.0, x.1));

    let mut matrix = SymMatrix::zeros(dim);
    for group in by_b.chunk_by(|x, y| x.0 == y.0) {
        for &(_, i, ai) in group {
            for &(_, j, aj) in group {
                matrix.add(i, j, ai * aj);
            }
        }
    }
    Ok(ReducedDensityMatrix { n_a, matrix })
}

// ---------------------------------------------------------------------------
// Sparse route

/// Which Gram product the sparse route diagonalizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramSide {
    /// Smaller of `C Cᵀ` and `Cᵀ C`, chosen per block.
    Auto,
    /// Always `C Cᵀ` (the A side).
    Rows,
    /// Always `Cᵀ C` (the B side).
    Cols,
}

/// Coefficient matrix over the A- and B-restrictions that occur in a support.
#[derive(Clone, Debug)]
pub struct CoefficientMatrix {
    rows: Vec<u64>,
    cols: Vec<u64>,
    // (row, col, value)
    entries: Vec<(u32, u32, f64)>,
}

impl CoefficientMatrix {
    pub fn from_function(f: &TargetFunction, part: &Bipartition) -> Result<Self> {
        check_geometry(f, part)?;
        let ga = Gather::new(part.mask_a());
        let gb = Gather::new(part.mask_b());
        let pairs: Vec<(u64, u64, f64)> = f
            .entries()
            .iter()
            .map(|&(s, amp)| (ga.apply(s), gb.apply(s), amp))
            .collect();
        let mut rows: Vec<u64> = pairs.iter().map(|p| p.0).collect();
        rows.sort_unstable();
        rows.dedup();
        let mut cols: Vec<u64> = pairs.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        cols.dedup();
        let entries = pairs
            .iter()
            .map(|&(a, b, v)| {
                (
                    rows.binary_search(&a).expect("row present") as u32,
                    cols.binary_search(&b).expect("col present") as u32,
                    v,
                )
            })
            .collect();
        Ok(Self { rows, cols, entries })
    }

    /// Distinct A-restrictions `p`.
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Distinct B-restrictions `q`.
    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_patterns(&self) -> &[u64] {
        &self.rows
    }

    pub fn col_patterns(&self) -> &[u64] {
        &self.cols
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    /// Relabels row `i` as `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rows.len());
        let mut rows = vec![0u64; self.rows.len()];
        for (i, &p) in perm.iter().enumerate() {
            rows[p] = self.rows[i];
        }
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (perm[r as usize] as u32, c, v))
            .collect();
        Self {
            rows,
            cols: self.cols.clone(),
            entries,
        }
    }

    fn transposed(&self) -> Self {
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        }
    }

    /// Row sets connected through shared columns; each is an independent block.
    fn blocks(&self) -> Vec<Block> {
        let p = self.rows.len();
        let mut uf = UnionFind::new(p);
        let mut first_row_of_col = vec![u32::MAX; self.cols.len()];
        for &(r, c, _) in &self.entries {
            let slot = &mut first_row_of_col[c as usize];
            if *slot == u32::MAX {
                *slot = r;
            } else {
                uf.union(*slot as usize, r as usize);
            }
        }
        let mut block_of_root = vec![usize::MAX; p];
        let mut blocks: Vec<Block> = Vec::new();
        let mut local_row = vec![0u32; p];
        for r in 0..p {
            let root = uf.find(r);
            if block_of_root[root] == usize::MAX {
                block_of_root[root] = blocks.len();
                blocks.push(Block::default());
            }
            let b = &mut blocks[block_of_root[root]];
            local_row[r] = b.n_rows;
            b.n_rows += 1;
        }
        let mut local_col = vec![u32::MAX; self.cols.len()];
        for &(r, c, v) in &self.entries {
            let b = &mut blocks[block_of_root[uf.find(r as usize)]];
            if local_col[c as usize] == u32::MAX {
                local_col[c as usize] = b.n_cols;
                b.n_cols += 1;
            }
            b.entries.push((local_row[r as usize], local_col[c as usize], v));
        }
        blocks
    }

    /// Squared singular values of `C`, via per-block Gram eigensolves.
    pub fn spectrum(&self, side: GramSide, gram_cap: usize) -> Result<SchmidtSpectrum> {
        let blocks = self.blocks();
        if let Some(worst) = blocks.iter().map(|b| b.gram_dim(side)).max() {
            if worst > gram_cap {
                return Err(Error::GramCapExceeded {
                    dim: worst,
                    cap: gram_cap,
                });
            }
        }
        let per_block: Vec<Vec<f64>> = blocks.par_iter().map(|b| b.eigenvalues(side)).collect();
        Ok(SchmidtSpectrum::from_eigenvalues(per_block.concat()))
    }
}

#[derive(Clone, Debug, Default)]
struct Block {
    n_rows: u32,
    n_cols: u32,
    entries: Vec<(u32, u32, f64)>,
}

impl Block {
    fn use_rows(&self, side: GramSide) -> bool {
        match side {
            GramSide::Rows => true,
            GramSide::Cols => false,
            GramSide::Auto => self.n_rows <= self.n_cols,
        }
    }

    fn gram_dim(&self, side: GramSide) -> usize {
        if self.n_rows == 1 || self.n_cols == 1 {
            return 1;
        }
        if self.use_rows(side) {
            self.n_rows as usize
        } else {
            self.n_cols as usize
        }
    }

    fn eigenvalues(&self, side: GramSide) -> Vec<f64> {
        if self.n_rows == 1 || self.n_cols == 1 {
            return vec![self.entries.iter().map(|e| e.2 * e.2).sum()];
        }
        let (dim, other, entries): (usize, usize, Vec<(u32, u32)>) = if self.use_rows(side) {
            (
                self.n_rows as usize,
                self.n_cols as usize,
                self.entries.iter().map(|e| (e.0, e.1)).collect(),
            )
        } else {
            (
                self.n_cols as usize,
                self.n_rows as usize,
                self.entries.iter().map(|e| (e.1, e.0)).collect(),
            )
        };
        // by_other[k] lists (gram index, value) for one contracted index k.
        let mut by_other: Vec<Vec<(u32, f64)>> = vec![Vec::new(); other];
        let mut by_dim: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for (&(i, k), e) in entries.iter().zip(&self.entries) {
            by_other[k as usize].push((i, e.2));
            by_dim[i as usize].push((k, e.2));
        }
        let mut gram = SymMatrix::zeros(dim);
        gram.as_mut_slice()
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(i, row)| {
                for &(k, vi) in &by_dim[i] {
                    for &(j, vj) in &by_other[k as usize] {
                        row[j as usize] += vi * vj;
                    }
                }
            });
        symmetric_eigenvalues(&gram)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index wins so block order follows row order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

pub fn schmidt_spectrum_sparse(f: &TargetFunction, part: &Bipartition) -> Result<SchmidtSpectrum> {
    schmidt_spectrum_sparse_with(f, part, GramSide::Auto, DEFAULT_GRAM_DIM)
}

pub fn schmidt_spectrum_sparse_with(
    f: &TargetFunction,
    part: &Bipartition,
    side: GramSide,
    gram_cap: usize,
) -> Result<SchmidtSpectrum> {
    CoefficientMatrix::from_function(f, part)?.spectrum(side, gram_cap)
}

/// Spectrum through the dense route, tracing out whichever side is larger.
pub fn schmidt_spectrum_dense(
    f: &TargetFunction,
    part: &Bipartition,
    max_pixels: usize,
) -> Result<SchmidtSpectrum> {
    if part.n_a() <= part.n_b() {
        Ok(reduced_density_matrix_capped(f, part, max_pixels)?.spectrum())
    } else {
        Ok(reduced_density_matrix_capped(f, &part.swapped(), max_pixels)?.spectrum())
    }
}

fn check_geometry(f: &TargetFunction, part: &Bipartition) -> Result<()> {
    if f.geometry() != part.geometry() {
        Err(Error::GeometryMismatch)
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutSummary {
    pub label: String,
    pub mask_a: String,
    pub n_a: usize,
    pub n_b: usize,
    pub l_ab: usize,
}

impl CutSummary {
    pub fn new(part: &Bipartition, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            mask_a: format!("{:x}", part.mask_a().0),
            n_a: part.n_a(),
            n_b: part.n_b(),
            l_ab: part.l_ab(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EntropyReport {
    pub spectrum: SchmidtSpectrum,
    pub entropy_bits: f64,
    /// `min(N_A, N_B)`.
    pub bound_volume_bits: f64,
    /// `log2(rank)`.
    pub bound_rank_bits: f64,
    pub path: SpectrumPath,
    pub cut: CutSummary,
    pub runtime_ms: f64,
}

impl EntropyReport {
    pub fn rank(&self) -> usize {
        self.spectrum.rank()
    }

    pub fn entropy(&self, base: EntropyBase) -> f64 {
        match base {
            EntropyBase::Bits => self.entropy_bits,
            EntropyBase::Nats => self.entropy_bits * std::f64::consts::LN_2,
        }
    }

    pub fn to_json(&self, base: EntropyBase) -> ReportJson {
        ReportJson {
            cut: self.cut.label.clone(),
            mask_a: self.cut.mask_a.clone(),
            n_a: self.cut.n_a,
            n_b: self.cut.n_b,
            l_ab: self.cut.l_ab,
            entropy_bits: (base == EntropyBase::Bits).then_some(self.entropy_bits),
            entropy_nats: (base == EntropyBase::Nats).then(|| self.entropy(EntropyBase::Nats)),
            rank: self.rank(),
            lambdas: self.spectrum.lambdas().iter().take(32).copied().collect(),
            path: self.path,
            runtime_ms: self.runtime_ms,
        }
    }
}

/// Wire form of an [`EntropyReport`].
#[derive(Clone, Debug, Serialize)]
pub struct ReportJson {
    pub cut: String,
    pub mask_a: String,
    pub n_a: usize,
    pub n_b: usize,
    pub l_ab: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_nats: Option<f64>,
    pub rank: usize,
    pub lambdas: Vec<f64>,
    pub path: SpectrumPath,
    pub runtime_ms: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EntropyOptions {
    pub caps: Caps,
    /// Force a route instead of dispatching on size and density.
    pub force: Option<SpectrumPath>,
}


/// Entropy across `part`, dispatching to the dense route when the smaller
/// side fits under the dense cap and at least a quarter of all `2^N` images
/// carry amplitude, and to the sparse route otherwise.
pub fn entanglement_entropy(f: &TargetFunction, part: &Bipartition) -> Result<EntropyReport> {
    entanglement_entropy_with(f, part, &EntropyOptions::default())
}

pub fn entanglement_entropy_with(
    f: &TargetFunction,
    part: &Bipartition,
    opts: &EntropyOptions,
) -> Result<EntropyReport> {
    let start = Instant::now();
    let path = opts.force.unwrap_or_else(|| choose_path(f, part, &opts.caps));
    let spectrum = match path {
        SpectrumPath::Dense => schmidt_spectrum_dense(f, part, opts.caps.dense_pixels)?,
        SpectrumPath::Sparse => {
            schmidt_spectrum_sparse_with(f, part, GramSide::Auto, opts.caps.gram_dim)?
        }
    };
    let entropy_bits = von_neumann_entropy(&spectrum, EntropyBase::Bits)?;
    let rank = spectrum.rank();
    Ok(EntropyReport {
        entropy_bits,
        bound_volume_bits: part.n_a().min(part.n_b()) as f64,
        bound_rank_bits: (rank.max(1) as f64).log2(),
        spectrum,
        path,
        cut: CutSummary::new(part, format!("mask:{:x}", part.mask_a().0)),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn choose_path(f: &TargetFunction, part: &Bipartition, caps: &Caps) -> SpectrumPath {
    let n = part.geometry().n_pixels();
    let small = part.n_a().min(part.n_b());
    let dense_support = n < 62 && (f.support_size() as u64) * 4 >= (1u64 << n);
    if small <= caps.dense_pixels && dense_support {
        SpectrumPath::Dense
    } else {
        SpectrumPath::Sparse
    }
}

/// Outcome of the `S_A = S_B` check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetryCheck {
    pub s_a_bits: f64,
    pub s_b_bits: f64,
    pub diff_bits: f64,
    pub pass: bool,
}

pub const SYMMETRY_TOL_BITS: f64 = 1e-9;

/// Computes `S_A` from `C Cᵀ` and `S_B` from `Cᵀ C` and compares them.
pub fn check_property1(f: &TargetFunction, part: &Bipartition) -> Result<SymmetryCheck> {
    check_property1_capped(f, part, DEFAULT_GRAM_DIM)
}

pub fn check_property1_capped(
    f: &TargetFunction,
    part: &Bipartition,
    gram_cap: usize,
) -> Result<SymmetryCheck> {
    let c = CoefficientMatrix::from_function(f, part)?;
    let s_a = von_neumann_entropy(&c.spectrum(GramSide::Rows, gram_cap)?, EntropyBase::Bits)?;
    let s_b = von_neumann_entropy(
        &c.transposed().spectrum(GramSide::Rows, gram_cap)?,
        EntropyBase::Bits,
    )?;
    let diff = (s_a - s_b).abs();
    Ok(SymmetryCheck {
        s_a_bits: s_a,
        s_b_bits: s_b,
        diff_bits: diff,
        pass: diff <= SYMMETRY_TOL_BITS,
    })
}
