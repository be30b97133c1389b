//! Symmetric eigendecomposition and spectral-convergence diagnostics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graphon::GraphonModel;
use crate::sampler::{deterministic_graph, random_graph};

/// Concentration constant in the failure bound `2N exp(-C N^{2γ})`.
pub const CONCENTRATION_C: f64 = 1.0 / 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Descending: `eigenvalues[0]` is the largest.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns in eigenvalue order.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, index: usize) -> DVector<f64> {
        self.eigenvectors.column(index).into_owned()
    }

    /// Columns at `indices`, in order.
    pub fn block(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_columns(
            &indices
                .iter()
                .map(|&i| self.eigenvectors.column(i))
                .collect::<Vec<_>>(),
        )
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidInput(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Dense symmetric eigendecomposition, sorted descending with fixed signs.
pub fn eig_sym(l: &DMatrix<f64>) -> Result<SpectralData> {
    check_symmetric(l)?;
    let n = l.nrows();
    let e = l.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| e.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        let mut v = e.eigenvectors.column(k).into_owned();
        let thresh = 1e-6 * v.norm();
        if let Some(first) = v.iter().find(|x| x.abs() > thresh) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        eigenvectors.set_column(c, &v);
    }
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
    })
}

/// Symmetric eigenvalues only, descending.
pub fn eigenvalues_sym(l: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(l)?;
    let mut v: Vec<f64> = l.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchBudget {
    pub mu: f64,
    pub delta: f64,
    pub delta0: f64,
    pub gamma: f64,
    pub m: usize,
    pub c: f64,
}

impl MatchBudget {
    pub fn new(mu: f64, delta: f64, delta0: f64, gamma: f64, m: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < delta0) {
            return Err(Error::InvalidInput(format!(
                "need 0 < delta < delta0, got {delta}, {delta0}"
            )));
        }
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::InvalidInput(format!("gamma = {gamma} is not in (0, 1/2)")));
        }
        if m == 0 {
            return Err(Error::InvalidInput("multiplicity must be positive".into()));
        }
        Ok(MatchBudget {
            mu,
            delta,
            delta0,
            gamma,
            m,
            c: CONCENTRATION_C,
        })
    }

    pub fn davis_kahan_bound(&self, n: usize) -> f64 {
        (8.0 * self.m as f64).sqrt()
            / ((self.delta0 - self.delta) * (n as f64).powf(0.5 - self.gamma))
    }
}

/// Indices `k` with `|λ_k/N - μ| < δ`.
pub fn match_eigenvalues(spec: &SpectralData, budget: &MatchBudget, n: usize) -> Vec<usize> {
    spec.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| (l / n as f64 - budget.mu).abs() < budget.delta)
        .map(|(k, _)| k)
        .collect()
}

/// `max_k |λ_k(A) - λ_k(B)|` with both spectra sorted.
pub fn weyl_gap(a: &SpectralData, b: &SpectralData) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok(a.eigenvalues
        .iter()
        .zip(b.eigenvalues.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Spectral norm of a symmetric matrix.
pub fn opnorm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues_sym(m)?
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    pub norms: Vec<f64>,
    pub ratios: Vec<f64>,
    pub failure_bound: f64,
}

/// Seed of trial `t` in a run with base seed `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_add(t as u64)
}

pub fn concentration_bound(n: usize, gamma: f64) -> f64 {
    let nf = n as f64;
    2.0 * nf * (-CONCENTRATION_C * nf.powf(2.0 * gamma)).exp()
}

/// Ratios `‖L_r - L_d‖ / N^{1/2+γ}` over `trials` seeded random graphs.
pub fn concentration_report(
    model: &GraphonModel,
    n: usize,
    gamma: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    let ld = deterministic_graph(model, n)?.laplacian;
    let scale = (n as f64).powf(0.5 + gamma);
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(seed, t)).collect();
    let mut norms = Vec::with_capacity(trials);
    for &s in &seeds {
        let lr = random_graph(model, n, s)?.laplacian;
        norms.push(opnorm(&(lr - &ld))?);
    }
    let ratios = norms.iter().map(|v| v / scale).collect();
    Ok(ConcentrationReport {
        n,
        gamma,
        seeds,
        norms,
        ratios,
        failure_bound: concentration_bound(n, gamma),
    })
}

/// `ω_k` with components `e^{2πik x_j}/√N` on the grid `x_j = j/N`.
pub fn fourier_basis(n: usize, k: i64) -> DVector<Complex64> {
    let s = 1.0 / (n as f64).sqrt();
    DVector::from_fn(n, |i, _| {
        let j = (i + 1) as f64;
        Complex64::from_polar(s, 2.0 * PI * k as f64 * j / n as f64)
    })
}

/// Real orthonormal pair `√(2/N)(cos, sin)(2πk x_j)` spanning `ω_{±k}`, `0 < k < N/2`.
pub fn fourier_real_block(n: usize, k: usize) -> DMatrix<f64> {
    let s = (2.0 / n as f64).sqrt();
    DMatrix::from_fn(n, 2, |i, c| {
        let t = 2.0 * PI * k as f64 * (i + 1) as f64 / n as f64;
        if c == 0 {
            s * t.cos()
        } else {
            s * t.sin()
        }
    })
}

/// Hermitian product `Σ conj(ω_i) v_i`.
pub fn fourier_coefficient(v: &DVector<f64>, k: i64) -> Complex64 {
    let w = fourier_basis(v.len(), k);
    w.iter().zip(v.iter()).map(|(wi, vi)| wi.conj() * vi).sum()
}

/// Fraction of `‖u‖` captured by the span of the given Fourier modes (mean included if `0` is listed).
pub fn fourier_correlation(u: &DVector<f64>, modes: &[usize]) -> f64 {
    let norm = u.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let n = u.len();
    let mut captured = 0.0;
    for &k in modes {
        let a = fourier_coefficient(u, k as i64);
        captured += if k == 0 || 2 * k == n {
            a.norm_sqr()
        } else {
            2.0 * a.norm_sqr()
        };
    }
    captured.sqrt() / norm
}

/// `min_O ‖V̂ O - V‖_F` over orthogonal `O`.
pub fn procrustes_residual(vhat: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    if vhat.shape() != v.shape() {
        return Err(Error::DimensionMismatch {
            expected: v.ncols(),
            found: vhat.ncols(),
        });
    }
    let svd = (vhat.transpose() * v).svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let o = u * vt;
    Ok((vhat * o - v).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub matched: Vec<usize>,
    pub k_star: usize,
    /// `a_j = ⟨ω_{k*}, v_j⟩` as `(re, im)`.
    pub coefficients: Vec<(f64, f64)>,
    pub residuals: Vec<f64>,
    pub procrustes_residual: f64,
    pub davis_kahan_bound: f64,
    pub beta: f64,
}

impl AlignmentReport {
    pub fn coefficient(&self, j: usize) -> Complex64 {
        let (re, im) = self.coefficients[j];
        Complex64::new(re, im)
    }
}

/// Aligns the matched eigenvectors with the Fourier pair `ω_{±k*}` and with a
/// reference block (e.g. the deterministic graph's eigenvectors).
pub fn align_to_fourier(
    spec: &SpectralData,
    matched: &[usize],
    k_star: usize,
    budget: &MatchBudget,
    reference: &DMatrix<f64>,
) -> Result<AlignmentReport> {
    if matched.is_empty() {
        return Err(Error::EmptyMatch);
    }
    let n = spec.n();
    let omega = fourier_basis(n, k_star as i64);
    let mut coefficients = Vec::new();
    let mut residuals = Vec::new();
    for &j in matched {
        let v = spec.vector(j);
        let a: Complex64 = omega.iter().zip(v.iter()).map(|(w, x)| w.conj() * x).sum();
        let proj = omega.map(|w| 2.0 * (a * w).re);
        residuals.push((&v - proj).norm());
        coefficients.push((a.re, a.im));
    }
    let block = spec.block(matched);
    let procrustes_residual = procrustes_residual(&block, reference)?;
    let beta = (n as f64).sqrt() * quad_self_interaction(&spec.vector(matched[0]))?;
    Ok(AlignmentReport {
        matched: matched.to_vec(),
        k_star,
        coefficients,
        residuals,
        procrustes_residual,
        davis_kahan_bound: budget.davis_kahan_bound(n),
        beta,
    })
}

/// `vᵀ(v∘v)` for a unit vector.
pub fn quad_self_interaction(v: &DVector<f64>) -> Result<f64> {
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("vector norm {norm} is not 1")));
    }
    Ok(v.iter().map(|x| x * x * x).sum())
}
