//! Classification-task generators and reference oracles.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{low_mask, ImageState, LatticeGeometry, PixelSet};
use crate::statespace::{TargetFunction, DEFAULT_DENSE_PIXELS};

/// Largest label-1 set a generator will materialize.
pub const MAX_LABEL1: u64 = 1 << 24;

/// Generator name, parameters and seed, enough to regenerate a task.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub geom: LatticeGeometry,
    label1: Vec<ImageState>,
    pub provenance: Provenance,
    /// Present when pixels are the edges of a vertex lattice (loop tasks).
    pub edge_lattice: Option<EdgeLattice>,
}

impl TaskSpec {
    pub fn new(
        name: impl Into<String>,
        geom: LatticeGeometry,
        mut label1: Vec<ImageState>,
        provenance: Provenance,
    ) -> Result<Self> {
        if label1.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(s) = label1.iter().find(|s| !geom.fits(**s)) {
            return Err(Error::OutOfRange {
                image: s.0,
                n: geom.n_pixels(),
            });
        }
        label1.sort_unstable();
        if let Some(w) = label1.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Duplicate(w[0].0));
        }
        Ok(Self {
            name: name.into(),
            geom,
            label1,
            provenance,
            edge_lattice: None,
        })
    }

    pub fn with_edge_lattice(mut self, lattice: EdgeLattice) -> Self {
        self.edge_lattice = Some(lattice);
        self
    }

    /// Label-1 images in canonical order.
    pub fn label1(&self) -> &[ImageState] {
        &self.label1
    }

    pub fn target_function(&self) -> Result<TargetFunction> {
        TargetFunction::from_label1_set(&self.geom, &self.label1)
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn params<const K: usize>(pairs: [(&str, Value); K]) -> BTreeMap<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

// ---------------------------------------------------------------------------
// Loop gas

pub const EDGE_LAYOUT: &str = "horizontal-then-vertical";

/// Edges of a `k x k` vertex torus (`periodic`) or a `(k+1) x (k+1)` open grid,
/// used as pixels. Horizontal edges come first in row-major order, then
/// vertical edges in row-major order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeLattice {
    pub k: usize,
    pub periodic: bool,
}

impl EdgeLattice {
    pub fn new(k: usize, periodic: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("loop lattice needs k >= 1".into()));
        }
        let lat = Self { k, periodic };
        let n = lat.n_edges();
        if n > crate::lattice::MAX_PIXELS {
            return Err(Error::SizeExceeded {
                what: "edge-pixel count",
                size: n as u64,
                limit: crate::lattice::MAX_PIXELS as u64,
            });
        }
        Ok(lat)
    }

    /// Vertices per row (and rows of vertices).
    pub fn side(&self) -> usize {
        if self.periodic {
            self.k
        } else {
            self.k + 1
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.side() * self.side()
    }

    pub fn n_edges(&self) -> usize {
        if self.periodic {
            2 * self.k * self.k
        } else {
            2 * self.k * (self.k + 1)
        }
    }

    pub fn vertex(&self, x: usize, y: usize) -> usize {
        y * self.side() + x
    }

    /// Pixel geometry holding the edge variables.
    pub fn geometry(&self) -> LatticeGeometry {
        let ly = self.n_edges() / self.k;
        LatticeGeometry::new(self.k, ly, self.periodic).expect("edge count checked")
    }

    /// `(owner, other)` endpoints of every edge in pixel order. The owner is
    /// the left (horizontal) or lower (vertical) endpoint.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let k = self.k;
        let w = self.side();
        let mut out = Vec::with_capacity(self.n_edges());
        if self.periodic {
            for y in 0..k {
                for x in 0..k {
                    out.push((self.vertex(x, y), self.vertex((x + 1) % k, y)));
                }
            }
            for y in 0..k {
                for x in 0..k {
                    out.push((self.vertex(x, y), self.vertex(x, (y + 1) % k)));
                }
            }
        } else {
            for y in 0..w {
                for x in 0..k {
                    out.push((self.vertex(x, y), self.vertex(x + 1, y)));
                }
            }
            for y in 0..k {
                for x in 0..w {
                    out.push((self.vertex(x, y), self.vertex(x, y + 1)));
                }
            }
        }
        out
    }

    /// Edge mask of every vertex (self-loops count twice, so parity is unaffected).
    fn incidence(&self) -> Vec<u64> {
        let mut inc = vec![0u64; self.n_vertices()];
        for (e, (u, v)) in self.edges().into_iter().enumerate() {
            if u != v {
                inc[u] ^= 1 << e;
                inc[v] ^= 1 << e;
            }
        }
        inc
    }

    /// True when every vertex has even degree.
    pub fn is_closed(&self, s: ImageState) -> bool {
        self.incidence().iter().all(|m| (s.0 & m).count_ones().is_multiple_of(2))
    }

    /// Fundamental cycles of a BFS spanning forest, as edge masks.
    pub fn cycle_basis(&self) -> Vec<u64> {
        let edges = self.edges();
        let nv = self.n_vertices();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adj[u].push((v, e));
            if u != v {
                adj[v].push((u, e));
            }
        }
        // parent edge and the edge-path mask from the root
        let mut path = vec![u64::MAX; nv];
        let mut tree = 0u64;
        for root in 0..nv {
            if path[root] != u64::MAX {
                continue;
            }
            path[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &(v, e) in &adj[u] {
                    if path[v] == u64::MAX {
                        path[v] = path[u] ^ (1 << e);
                        tree |= 1 << e;
                        queue.push_back(v);
                    }
                }
            }
        }
        edges
            .iter()
            .enumerate()
            .filter(|&(e, _)| tree & (1 << e) == 0)
            .map(|(e, &(u, v))| (1u64 << e) ^ path[u] ^ path[v])
            .collect()
    }

    /// Edge mask of the edges owned by the given vertices.
    pub fn owned_edges(&self, vertices: &[usize]) -> PixelSet {
        let chosen: HashSet<usize> = vertices.iter().copied().collect();
        PixelSet::from_indices(
            self.edges()
                .into_iter()
                .enumerate()
                .filter(|(_, (owner, _))| chosen.contains(owner))
                .map(|(e, _)| e),
        )
    }

    /// Vertices touching edges on both sides of an edge bipartition.
    pub fn cut_vertices(&self, mask_a: PixelSet) -> usize {
        self.incidence()
            .iter()
            .filter(|&&m| m & mask_a.0 != 0 && m & !mask_a.0 != 0)
            .count()
    }

    /// Edges whose endpoints fall on different sides of a vertex region.
    pub fn crossing_edges(&self, vertices: &[usize]) -> usize {
        let chosen: HashSet<usize> = vertices.iter().copied().collect();
        self.edges()
            .into_iter()
            .filter(|(u, v)| chosen.contains(u) != chosen.contains(v))
            .count()
    }

    /// Vertices column by column (`column_major`) or row by row.
    pub fn vertex_order(&self, column_major: bool) -> Vec<usize> {
        let w = self.side();
        (0..w)
            .flat_map(|a| (0..w).map(move |b| if column_major { (a, b) } else { (b, a) }))
            .map(|(x, y)| self.vertex(x, y))
            .collect()
    }
}

/// All closed-loop images (every vertex has even degree) on the edge lattice.
pub fn gen_closed_loops(k: usize, periodic: bool) -> Result<TaskSpec> {
    let lat = EdgeLattice::new(k, periodic)?;
    let basis = lat.cycle_basis();
    let count = 1u64 << basis.len().min(63);
    if basis.len() >= 63 || count > MAX_LABEL1 {
        return Err(Error::SizeExceeded {
            what: "closed-loop configurations",
            size: count,
            limit: MAX_LABEL1,
        });
    }
    // Gray-code walk over the cycle space.
    let mut images = Vec::with_capacity(count as usize);
    let mut current = 0u64;
    images.push(ImageState(0));
    for i in 1..count {
        current ^= basis[i.trailing_zeros() as usize];
        images.push(ImageState(current));
    }
    let name = format!("loops-k{k}-{}", if periodic { "periodic" } else { "open" });
    let provenance = Provenance {
        generator: "loops".into(),
        params: params([
            ("k", json!(k)),
            ("periodic", json!(periodic)),
            ("layout", json!(EDGE_LAYOUT)),
        ]),
        seed: None,
    };
    Ok(TaskSpec::new(name, lat.geometry(), images, provenance)?.with_edge_lattice(lat))
}

// ---------------------------------------------------------------------------
// Random sets, parity, fixtures

/// `count` distinct images drawn uniformly without replacement.
pub fn gen_random_set(geom: &LatticeGeometry, count: u64, seed: u64) -> Result<TaskSpec> {
    let n = geom.n_pixels();
    let available: u128 = 1u128 << n;
    if count == 0 || u128::from(count) > available {
        return Err(Error::CountExceeded {
            count,
            available: available.min(u128::from(u64::MAX)) as u64,
        });
    }
    if count > MAX_LABEL1 {
        return Err(Error::SizeExceeded {
            what: "random label-1 set",
            size: count,
            limit: MAX_LABEL1,
        });
    }
    let mut rng = rng_for(seed);
    let images: Vec<ImageState> = if n <= 26 {
        rand::seq::index::sample(&mut rng, 1usize << n, count as usize)
            .into_iter()
            .map(|i| ImageState(i as u64))
            .collect()
    } else {
        let mask = low_mask(n);
        let mut seen = HashSet::with_capacity(count as usize);
        let mut out = Vec::with_capacity(count as usize);
        while out.len() < count as usize {
            let s = rng.random::<u64>() & mask;
            if seen.insert(s) {
                out.push(ImageState(s));
            }
        }
        out
    };
    let provenance = Provenance {
        generator: "random".into(),
        params: params([("count", json!(count))]),
        seed: Some(seed),
    };
    TaskSpec::new(format!("random-{count}"), geom.clone(), images, provenance)
}

/// Images with even (or odd) popcount.
pub fn gen_parity(geom: &LatticeGeometry, even: bool) -> Result<TaskSpec> {
    let n = geom.n_pixels();
    if n < 2 {
        return Err(Error::InvalidArgument("parity task needs N >= 2".into()));
    }
    if n > 25 {
        return Err(Error::SizeExceeded {
            what: "parity task pixels",
            size: n as u64,
            limit: 25,
        });
    }
    let want = if even { 0 } else { 1 };
    let images = (0..1u64 << n)
        .filter(|s| s.count_ones() % 2 == want)
        .map(ImageState)
        .collect();
    let provenance = Provenance {
        generator: "parity".into(),
        params: params([("even", json!(even))]),
        seed: None,
    };
    let name = if even { "parity-even" } else { "parity-odd" };
    TaskSpec::new(name, geom.clone(), images, provenance)
}

pub fn gen_single(geom: &LatticeGeometry, image: ImageState) -> Result<TaskSpec> {
    let provenance = Provenance {
        generator: "single".into(),
        params: params([("image", json!(format!("{image}")))]),
        seed: None,
    };
    TaskSpec::new("single", geom.clone(), vec![image], provenance)
}

/// Label-1 set that fixes a random subset of pixels to random values and
/// leaves the rest free. Its indicator factorizes across every cut.
pub fn gen_product_set(geom: &LatticeGeometry, max_free: usize, seed: u64) -> Result<TaskSpec> {
    let n = geom.n_pixels();
    let mut rng = rng_for(seed);
    let mut free = Vec::new();
    let mut fixed = 0u64;
    for i in 0..n {
        match rng.random_range(0..3u8) {
            0 if free.len() < max_free => free.push(i),
            1 => fixed |= 1 << i,
            _ => {}
        }
    }
    let images = (0..1u64 << free.len())
        .map(|pattern| {
            let mut s = fixed;
            for (j, &i) in free.iter().enumerate() {
                s |= ((pattern >> j) & 1) << i;
            }
            ImageState(s)
        })
        .collect();
    let provenance = Provenance {
        generator: "product".into(),
        params: params([("max_free", json!(max_free))]),
        seed: Some(seed),
    };
    TaskSpec::new("product", geom.clone(), images, provenance)
}

/// Real Gaussian amplitudes on all `2^N` images.
pub fn gaussian_state(geom: &LatticeGeometry, seed: u64) -> Result<TargetFunction> {
    let n = geom.n_pixels();
    if n > DEFAULT_DENSE_PIXELS {
        return Err(Error::SizeExceeded {
            what: "dense Gaussian state pixels",
            size: n as u64,
            limit: DEFAULT_DENSE_PIXELS as u64,
        });
    }
    let mut rng = rng_for(seed);
    let amps: Vec<(ImageState, f64)> = (0..1u64 << n)
        .map(|s| (ImageState(s), rng.sample::<f64, _>(StandardNormal)))
        .collect();
    TargetFunction::from_weighted(geom, amps)
}

/// Seeded per-pixel weights for logistic product functions.
pub fn random_weights(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed);
    (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
}

// ---------------------------------------------------------------------------
// Page reference

/// Average entanglement entropy (nats) of a Haar-random pure state on
/// `n_a + n_b` qubits: `Σ_{k=n+1}^{mn} 1/k − (m−1)/(2n)`, `m ≤ n`.
pub fn page_reference_entropy(n_a: usize, n_b: usize) -> f64 {
    let (small, large) = (n_a.min(n_b), n_a.max(n_b));
    assert!(small + large <= 62, "Page formula beyond 2^62 dimensions");
    let m = (1u64 << small) as f64;
    let n = 1u64 << large;
    let mn = 1u64 << (small + large);
    harmonic_range(n + 1, mn) - (m - 1.0) / (2.0 * n as f64)
}

/// `Σ_{k=lo}^{hi} 1/k`, zero when `lo > hi`.
fn harmonic_range(lo: u64, hi: u64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    if hi - lo < 1_000_000 {
        return (lo..=hi).rev().map(|k| 1.0 / k as f64).sum();
    }
    harmonic(hi) - harmonic(lo - 1)
}

fn harmonic(x: u64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if x < 1_000_000 {
        return (1..=x).rev().map(|k| 1.0 / k as f64).sum();
    }
    let xf = x as f64;
    let inv2 = 1.0 / (xf * xf);
    xf.ln() + EULER_GAMMA + 0.5 / xf - inv2 / 12.0 + inv2 * inv2 / 120.0
}
