//! Normalized target functions over binary images.
//!
//! A [`TargetFunction`] is a sparse, L2-normalized map from images to real
//! amplitudes. Indicator functions of label-1 sets give uniform amplitudes on
//! their support; the logistic (product) family is dense.

use crate::error::{Error, Result};
use crate::lattice::{ImageState, LatticeGeometry};

/// Default cap on `N` for constructors that materialize all `2^N` images.
pub const DEFAULT_DENSE_PIXELS: usize = 20;

const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TargetFunction {
    geom: LatticeGeometry,
    // Sorted by image, no zero amplitudes.
    amps: Vec<(ImageState, f64)>,
}

impl TargetFunction {
    /// Uniform superposition over a label-1 image set.
    pub fn from_label1_set(geom: &LatticeGeometry, images: &[ImageState]) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptySet);
        }
        let amp = 1.0 / (images.len() as f64).sqrt();
        Self::from_weighted(geom, images.iter().map(|&s| (s, amp)))
    }

    /// Arbitrary real weights per image, normalized after construction.
    /// Zero weights are dropped; repeated images are an error.
    pub fn from_weighted<I>(geom: &LatticeGeometry, weighted: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ImageState, f64)>,
    {
        let mut amps: Vec<(ImageState, f64)> = Vec::new();
        for (s, w) in weighted {
            if !geom.fits(s) {
                return Err(Error::OutOfRange {
                    image: s.0,
                    n: geom.n_pixels(),
                });
            }
            if !w.is_finite() {
                return Err(Error::NonFinite(format!("weight {w} for image {s}")));
            }
            amps.push((s, w));
        }
        if amps.is_empty() {
            return Err(Error::EmptySet);
        }
        amps.sort_unstable_by_key(|&(s, _)| s);
        if let Some(w) = amps.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Duplicate(w[0].0 .0));
        }
        amps.retain(|&(_, w)| w != 0.0);
        normalize(&mut amps)?;
        Ok(Self {
            geom: geom.clone(),
            amps,
        })
    }

    /// Logistic-regression form `f(s) ∝ exp(Σ_i a_i s(i))`, materialized densely.
    pub fn product_function(geom: &LatticeGeometry, weights: &[f64]) -> Result<Self> {
        Self::product_function_capped(geom, weights, DEFAULT_DENSE_PIXELS)
    }

    pub fn product_function_capped(
        geom: &LatticeGeometry,
        weights: &[f64],
        max_pixels: usize,
    ) -> Result<Self> {
        let n = geom.n_pixels();
        if weights.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} weights, got {}",
                weights.len()
            )));
        }
        if n > max_pixels {
            return Err(Error::SizeExceeded {
                what: "dense product function pixels",
                size: n as u64,
                limit: max_pixels as u64,
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::NonFinite(format!("weight {w}")));
        }
        // Per-pixel normalized factors (off, on), computed without overflow.
        let factors: Vec<(f64, f64)> = weights
            .iter()
            .map(|&a| {
                let on = if a > 0.0 {
                    1.0 / (1.0 + (-2.0 * a).exp()).sqrt()
                } else {
                    a.exp() / (1.0 + (2.0 * a).exp()).sqrt()
                };
                let off = if a > 0.0 {
                    (-a).exp() / (1.0 + (-2.0 * a).exp()).sqrt()
                } else {
                    1.0 / (1.0 + (2.0 * a).exp()).sqrt()
                };
                (off, on)
            })
            .collect();
        let amps = (0..1u64 << n).map(|s| {
            let amp = factors
                .iter()
                .enumerate()
                .map(|(i, &(off, on))| if (s >> i) & 1 == 1 { on } else { off })
                .product::<f64>();
            (ImageState(s), amp)
        });
        Self::from_weighted(geom, amps)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geom
    }

    /// Number of nonzero amplitudes.
    pub fn support_size(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, s: ImageState) -> f64 {
        self.amps
            .binary_search_by_key(&s, |&(t, _)| t)
            .map(|i| self.amps[i].1)
            .unwrap_or(0.0)
    }

    /// Nonzero `(image, amplitude)` pairs in canonical order.
    pub fn entries(&self) -> &[(ImageState, f64)] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|&(_, a)| a * a).sum()
    }

    /// `⟨f|g⟩ = Σ_s f(s) g(s)` over the intersection of supports.
    pub fn inner_product(&self, other: &TargetFunction) -> Result<f64> {
        if self.geom != other.geom {
            return Err(Error::GeometryMismatch);
        }
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.amps.len() && j < other.amps.len() {
            let (s, a) = self.amps[i];
            let (t, b) = other.amps[j];
            match s.cmp(&t) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a * b;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc)
    }

    /// Full `2^N` amplitude vector. Test and oracle use only.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.geom.n_pixels();
        assert!(n <= 30, "dense vector of 2^{n} entries");
        let mut v = vec![0.0; 1usize << n];
        for &(s, a) in &self.amps {
            v[s.0 as usize] = a;
        }
        v
    }
}

fn normalize(amps: &mut Vec<(ImageState, f64)>) -> Result<()> {
    if amps.is_empty() {
        return Err(Error::ZeroNorm);
    }
    let mut norm = amps.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    // A second pass absorbs rounding left by the first.
    for _ in 0..2 {
        for (_, a) in amps.iter_mut() {
            *a /= norm;
        }
        norm = amps.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
        if (norm * norm - 1.0).abs() <= NORM_TOL {
            break;
        }
    }
    amps.retain(|&(_, a)| a != 0.0);
    if amps.is_empty() {
        return Err(Error::ZeroNorm);
    }
    Ok(())
}
