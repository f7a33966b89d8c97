//! Dense exact-spectrum oracle (cyclic Jacobi) and the level/potential
//! profiler used to inspect decremental runs at desk scale.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::params::{ceil_usize, log2};
use crate::sparse::dense;

/// Largest dimension the oracle accepts by default.
pub const ORACLE_CAP: usize = 512;

const SYMMETRY_TOL: f64 = 1e-12;
const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;
/// Level coordinates this close to an integer snap onto the boundary.
const BOUNDARY_SNAP: f64 = 1e-10;

/// Eigenpairs of a dense symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    /// Row-major `n × n`; row `i` is the eigenvector `u_i`.
    vectors: Vec<f64>,
}

impl ExactSpectrum {
    /// Eigenpairs known by construction. `vectors` holds `u_i` as row `i`;
    /// pairs are re-sorted by descending eigenvalue.
    pub fn from_parts(eigenvalues: Vec<f64>, vectors: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 {
            return Err(Error::InvalidParameter("spectrum must be non-empty".into()));
        }
        check_dim(n * n, vectors.len())?;
        if !dense::all_finite(&eigenvalues) || !dense::all_finite(&vectors) {
            return Err(Error::NonFinite("spectrum"));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]).then(i.cmp(&j)));
        let mut vals = Vec::with_capacity(n);
        let mut vecs = Vec::with_capacity(n * n);
        for &i in &order {
            vals.push(eigenvalues[i]);
            vecs.extend_from_slice(&vectors[i * n..(i + 1) * n]);
        }
        Ok(Self { n, eigenvalues: vals, vectors: vecs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[self.n - 1]
    }

    /// `max_i |λ_i|`, the spectral norm of the matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.lambda_max().abs().max(self.lambda_min().abs())
    }

    /// `max_i ‖A u_i − λ_i u_i‖` against the row-major matrix `a`.
    pub fn max_residual(&self, a: &[f64]) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            let u = self.eigenvector(i);
            let mut r = 0.0;
            for row in 0..n {
                let au = dense::dot(&a[row * n..(row + 1) * n], u);
                let d = au - self.eigenvalues[i] * u[row];
                r += d * d;
            }
            worst = worst.max(libm::sqrt(r));
        }
        worst
    }

    /// `max_{i≠j} |u_iᵀu_j|` together with `max_i |‖u_i‖ − 1|`.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for i in 0..self.n {
            diag = diag.max((dense::norm(self.eigenvector(i)) - 1.0).abs());
            for j in 0..i {
                off = off.max(dense::dot(self.eigenvector(i), self.eigenvector(j)).abs());
            }
        }
        (off, diag)
    }
}

/// Eigen-decomposition of the row-major symmetric matrix `a` with the default cap.
pub fn exact_spectrum(n: usize, a: &[f64]) -> Result<ExactSpectrum> {
    exact_spectrum_capped(n, a, ORACLE_CAP)
}

/// Cyclic Jacobi: sweeps rotate away every off-diagonal entry until the
/// off-diagonal Frobenius mass is at most `1e−14 · ‖A‖_F`.
pub fn exact_spectrum_capped(n: usize, a: &[f64], cap: usize) -> Result<ExactSpectrum> {
    if n == 0 {
        return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
    }
    if n > cap {
        return Err(Error::CapExceeded { what: "oracle dimension", value: n, cap });
    }
    check_dim(n * n, a.len())?;
    let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            let (x, y) = (a[i * n + j], a[j * n + i]);
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::NonFinite("oracle input"));
            }
            if (x - y).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }

    let mut m: Vec<f64> = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
        }
    }
    // Columns of `v` accumulate the rotations; stored row-major.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = libm::sqrt(m.iter().map(|x| x * x).sum::<f64>());
    let target = OFF_DIAGONAL_TOL * frob;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if libm::sqrt(off) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (row, &col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[row * n + k] = v[k * n + col];
        }
    }
    Ok(ExactSpectrum { n, eigenvalues, vectors })
}

/// Level dimensions of a matrix relative to a fixed reference `λ_0`.
///
/// Level `ν` collects eigenvalues with `(1 − λ/λ_0)/width ∈ [ν, ν+1)`, where
/// `width = ε/(5 log₂(n/ε))`; only eigenvalues at or above `(1 − 3ε)λ_0`
/// are binned.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumProfile {
    pub lambda0: f64,
    pub eps: f64,
    pub level_width: f64,
    /// `d_ν` for `ν = 0 … ⌈15 log₂(n/ε)⌉ − 1`.
    pub levels: Vec<usize>,
    pub important: Vec<usize>,
    /// `Φ_j = Σ_{ν≤j} d_ν`.
    pub potentials: Vec<usize>,
    /// Number of eigenvalues at or above `(1 − 3ε)λ_0`.
    pub dim_t: usize,
    /// Eigenvalues below `(1 − 3ε)λ_0`.
    pub below: usize,
}

pub fn level_count(n: usize, eps: f64) -> usize {
    ceil_usize(15.0 * log2(n as f64 / eps))
}

pub fn level_width(n: usize, eps: f64) -> f64 {
    eps / (5.0 * log2(n as f64 / eps))
}

/// Threshold factor of an important level: `ε / (600 log₂³(n/ε))`.
pub fn importance_factor(n: usize, eps: f64) -> f64 {
    let l = log2(n as f64 / eps);
    eps / (600.0 * l * l * l)
}

/// Bins `eigenvalues` (any order) into levels below `lambda0`.
pub fn spectrum_profile(eigenvalues: &[f64], lambda0: f64, eps: f64) -> Result<SpectrumProfile> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("lambda0 must be positive, got {lambda0}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("eps must lie in (0, 1), got {eps}")));
    }
    let n = eigenvalues.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    if (n as f64) <= eps {
        return Err(Error::InvalidParameter("n/eps must exceed 1".into()));
    }
    let width = level_width(n, eps);
    let count = level_count(n, eps);
    let floor_value = (1.0 - 3.0 * eps) * lambda0;
    let mut levels = vec![0usize; count];
    let mut below = 0usize;
    for &lambda in eigenvalues {
        let mut x = (1.0 - lambda / lambda0) / width;
        let nearest = libm::round(x);
        if (x - nearest).abs() <= BOUNDARY_SNAP {
            x = nearest;
        }
        let at_floor = (x - 3.0 * eps / width).abs() <= BOUNDARY_SNAP;
        if lambda < floor_value && !at_floor {
            below += 1;
            continue;
        }
        let nu = if x <= 0.0 { 0 } else { (libm::floor(x) as usize).min(count - 1) };
        levels[nu] += 1;
    }
    let factor = importance_factor(n, eps);
    let mut potentials = Vec::with_capacity(count);
    let mut important = Vec::new();
    let mut acc = 0usize;
    for (nu, &d) in levels.iter().enumerate() {
        if d > 0 && d as f64 >= factor * acc as f64 {
            important.push(nu);
        }
        acc += d;
        potentials.push(acc);
    }
    Ok(SpectrumProfile {
        lambda0,
        eps,
        level_width: width,
        levels,
        important,
        potentials,
        dim_t: acc,
        below,
    })
}

/// Runs the Jacobi oracle on a row-major matrix and profiles it.
pub fn spectrum_profile_of(n: usize, a: &[f64], lambda0: f64, eps: f64) -> Result<SpectrumProfile> {
    let spec = exact_spectrum(n, a)?;
    spectrum_profile(spec.eigenvalues(), lambda0, eps)
}

/// `Φ_j` at each recorded event, in event order.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTrace {
    pub table: Vec<Vec<usize>>,
}

impl PotentialTrace {
    /// `(event, j)` pairs where `Φ_j` grew relative to the previous event.
    pub fn increases(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for e in 1..self.table.len() {
            for (j, (&now, &before)) in self.table[e].iter().zip(&self.table[e - 1]).enumerate() {
                if now > before {
                    out.push((e, j));
                }
            }
        }
        out
    }

    /// Whether some `Φ_j` strictly dropped from event `e − 1` to `e`.
    pub fn strictly_decreased(&self, e: usize) -> bool {
        e > 0
            && self.table[e]
                .iter()
                .zip(&self.table[e - 1])
                .any(|(now, before)| now < before)
    }
}

pub fn potential_trace(profiles: &[SpectrumProfile]) -> PotentialTrace {
    PotentialTrace { table: profiles.iter().map(|p| p.potentials.clone()).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_oracle_invariants(n: usize, a: &[f64], s: &ExactSpectrum) {
        let norm = libm::sqrt(a.iter().map(|x| x * x).sum::<f64>()).max(1.0);
        assert!(s.max_residual(a) <= 1e-8 * norm);
        let (off, diag) = s.orthonormality_error();
        assert!(off <= 1e-10 && diag <= 1e-10, "off {off} diag {diag}");
        assert!(s.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(s.n(), n);
    }

    #[test]
    fn diagonal_matrix() {
        let a = [3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let s = exact_spectrum(3, &a).unwrap();
        assert_eq!(s.eigenvalues(), &[3.0, 2.0, 1.0]);
        assert_eq!(s.eigenvector(0), &[1.0, 0.0, 0.0]);
        assert_eq!(s.eigenvector(1), &[0.0, 0.0, 1.0]);
        assert_eq!(s.eigenvector(2), &[0.0, 1.0, 0.0]);
        assert_oracle_invariants(3, &a, &s);
    }

    #[test]
    fn zero_matrix() {
        let a = vec![0.0; 16];
        let s = exact_spectrum(4, &a).unwrap();
        assert!(s.eigenvalues().iter().all(|&l| l == 0.0));
        assert_oracle_invariants(4, &a, &s);
    }

    #[test]
    fn two_by_two() {
        let a = [2.0, 1.0, 1.0, 2.0];
        let s = exact_spectrum(2, &a).unwrap();
        assert!((s.eigenvalues()[0] - 3.0).abs() < 1e-14);
        assert!((s.eigenvalues()[1] - 1.0).abs() < 1e-14);
        assert_oracle_invariants(2, &a, &s);
    }

    #[test]
    fn rejects_asymmetric_and_oversized() {
        assert!(matches!(exact_spectrum(2, &[1.0, 2.0, 0.0, 1.0]), Err(Error::NotSymmetric { .. })));
        assert!(matches!(
            exact_spectrum_capped(3, &[0.0; 9], 2),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn profile_of_scaled_identity() {
        let eig = vec![2.0; 10];
        let p = spectrum_profile(&eig, 2.0, 0.2).unwrap();
        assert_eq!(p.levels[0], 10);
        assert!(p.levels[1..].iter().all(|&d| d == 0));
        assert!(p.potentials.iter().all(|&phi| phi == 10));
        assert_eq!(p.important, vec![0]);
        assert_eq!(p.dim_t, 10);
        assert_eq!(p.levels.len(), level_count(10, 0.2));
    }

    #[test]
    fn profile_binning_by_hand() {
        // n = 2, ε = 0.2: width = 0.2 / (5 log₂ 10) = 0.012041...
        let p = spectrum_profile(&[1.0, 0.5], 1.0, 0.2).unwrap();
        let width = 0.2 / (5.0 * libm::log2(10.0));
        assert!((p.level_width - width).abs() < 1e-15);
        assert_eq!(p.levels[0], 1);
        // 0.5 < (1 − 3·0.2) = 0.4? No: 0.5 ≥ 0.4, so it is binned.
        let nu = libm::floor(0.5 / width) as usize; // 41
        assert_eq!(nu, 41);
        assert_eq!(p.levels[nu], 1);
        assert_eq!(p.dim_t, 2);
        // With ε = 0.1 the floor is 0.7 and 0.5 drops below it.
        let q = spectrum_profile(&[1.0, 0.5], 1.0, 0.1).unwrap();
        assert_eq!((q.dim_t, q.below), (1, 1));
    }

    #[test]
    fn profile_all_below() {
        let p = spectrum_profile(&[0.3, 0.2, 0.1], 1.0, 0.2).unwrap();
        assert!(p.levels.iter().all(|&d| d == 0));
        assert_eq!(p.dim_t, 0);
        assert_eq!(p.below, 3);
        assert!(spectrum_profile(&[1.0], 0.0, 0.2).is_err());
    }

    #[test]
    fn potential_trace_monotone_for_identical_and_shrinking() {
        let a = spectrum_profile(&[1.0, 0.95, 0.9, 0.5], 1.0, 0.2).unwrap();
        let b = spectrum_profile(&[0.97, 0.93, 0.9, 0.5], 1.0, 0.2).unwrap();
        let same = potential_trace(&[a.clone(), a.clone()]);
        assert!(same.increases().is_empty());
        assert_eq!(same.table[0], same.table[1]);
        let tr = potential_trace(&[a, b]);
        assert!(tr.increases().is_empty());
        assert!(tr.strictly_decreased(1));
    }
}
