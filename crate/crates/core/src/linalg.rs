//! Dense real-symmetric eigenvalues.
//!
//! Small matrices go through cyclic Jacobi sweeps; larger ones are reduced to
//! tridiagonal form with Householder reflections and finished with implicit QL.
//! Both are accurate to roughly `1e-14 * ||A||` in absolute terms.

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    acc += self.get(i, j).powi(2);
                }
            }
        }
        acc.sqrt()
    }
}

/// Matrices up to this order use Jacobi; larger ones use tridiagonal QL.
pub const JACOBI_MAX_DIM: usize = 8;

/// Eigenvalues of a symmetric matrix, in descending order.
pub fn symmetric_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let mut vals = if a.dim() <= JACOBI_MAX_DIM {
        jacobi_eigenvalues(a)
    } else {
        tridiagonal_ql_eigenvalues(a)
    };
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

/// Cyclic Jacobi sweeps until the off-diagonal Frobenius norm drops below
/// `1e-13 * max(1, ||A||_F)`. Eigenvalues come back unsorted.
pub fn jacobi_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    const MAX_SWEEPS: usize = 100;
    let n = a.dim();
    let mut m = a.clone();
    let tol = 1e-13 * m.frobenius().max(1.0);
    for _ in 0..MAX_SWEEPS {
        if m.off_diagonal_norm() < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    m.set(k, p, new_kp);
                    m.set(p, k, new_kp);
                    m.set(k, q, new_kq);
                    m.set(q, k, new_kq);
                }
                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
            }
        }
    }
    (0..n).map(|i| m.get(i, i)).collect()
}

/// Householder tridiagonalization followed by implicit QL with Wilkinson-style
/// shifts. Eigenvalues come back unsorted.
pub fn tridiagonal_ql_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let (mut d, mut e) = householder_tridiagonal(a);
    tql(&mut d, &mut e);
    d
}

/// Returns the diagonal `d` and subdiagonal `e` (`e[k]` couples `k` and `k+1`,
/// `e[n-1] = 0`).
fn householder_tridiagonal(a: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let mut m = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let norm = (lo..n).map(|i| m.get(i, k).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            d[k] = m.get(k, k);
            e[k] = 0.0;
            continue;
        }
        let x0 = m.get(lo, k);
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for i in lo..n {
            v[i] = m.get(i, k);
        }
        v[lo] -= alpha;
        let vnorm = (lo..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        d[k] = m.get(k, k);
        e[k] = alpha;
        if vnorm == 0.0 {
            continue;
        }
        for i in lo..n {
            v[i] /= vnorm;
        }
        // p = A v on the trailing block, then w = p - (v.p) v.
        for i in lo..n {
            let row = &m.data[i * n + lo..i * n + n];
            w[i] = row.iter().zip(&v[lo..n]).map(|(x, y)| x * y).sum();
        }
        let kappa: f64 = (lo..n).map(|i| v[i] * w[i]).sum();
        for i in lo..n {
            w[i] -= kappa * v[i];
        }
        for i in lo..n {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut m.data[i * n + lo..i * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                let j = j + lo;
                *x -= 2.0 * (vi * w[j] + wi * v[j]);
            }
        }
    }
    if n >= 2 {
        d[n - 2] = m.get(n - 2, n - 2);
        e[n - 2] = m.get(n - 1, n - 2);
    }
    if n >= 1 {
        d[n - 1] = m.get(n - 1, n - 1);
        e[n - 1] = 0.0;
    }
    (d, e)
}

fn tql(d: &mut [f64], e: &mut [f64]) {
    const MAX_ITER: usize = 90;
    let n = d.len();
    if n == 0 {
        return;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        // xorshift, keeps the test free of the crate's RNG choices
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    fn nalgebra_eigs(m: &SymMatrix) -> Vec<f64> {
        let n = m.dim();
        let mat = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
        let mut v: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    #[test]
    fn diagonal_and_tiny() {
        assert!(symmetric_eigenvalues(&SymMatrix::zeros(0)).is_empty());
        let m = SymMatrix::from_row_major(1, vec![0.7]);
        assert_eq!(symmetric_eigenvalues(&m), vec![0.7]);
        let m = SymMatrix::from_row_major(2, vec![0.5, 0.5, 0.5, 0.5]);
        let ev = symmetric_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-14 && ev[1].abs() < 1e-14);
    }

    #[test]
    fn both_solvers_match_reference() {
        for (n, seed) in [(2, 1), (3, 2), (7, 3), (20, 4), (33, 5), (64, 6), (100, 7)] {
            let m = random_sym(n, seed);
            let reference = nalgebra_eigs(&m);
            let jac = sorted(jacobi_eigenvalues(&m));
            let ql = sorted(tridiagonal_ql_eigenvalues(&m));
            for k in 0..n {
                assert!((jac[k] - reference[k]).abs() < 1e-11, "jacobi n={n} k={k}");
                assert!((ql[k] - reference[k]).abs() < 1e-11, "ql n={n} k={k}");
            }
        }
    }

    #[test]
    fn rank_one_projector() {
        let n = 50;
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, v[i] * v[j] / norm);
            }
        }
        let ev = symmetric_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-13);
        assert!(ev[1..].iter().all(|x| x.abs() < 1e-13));
    }

    proptest! {
        #[test]
        fn trace_is_preserved(n in 1usize..48, seed in any::<u64>()) {
            let m = random_sym(n, seed);
            let sum: f64 = symmetric_eigenvalues(&m).iter().sum();
            prop_assert!((sum - m.trace()).abs() < 1e-11);
        }
    }
}
