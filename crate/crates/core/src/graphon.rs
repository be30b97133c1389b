//! Graphon models on `[0,1]²` and their exact Laplacian spectra.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Grid used to check that a Fourier kernel stays inside `[0,1]`.
pub const VALIDATION_GRID: usize = 1024;

/// Default Fourier truncation for spectra of ring graphons.
pub const DEFAULT_K: usize = 64;

const RANGE_SLACK: f64 = 1e-12;
// Ties `d == alpha` land inside the near-neighbour band even after rounding of grid points.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphonModel {
    /// `R(d) = c_0 + 2 Σ_{k=1}^{K} c_k cos(2πkd)`, with `K = coeffs.len() - 1`.
    FourierRing { coeffs: Vec<f64> },
    SmallWorld { p: f64, q: f64, alpha: f64 },
    ErdosRenyi { p: f64 },
    Bipartite { p: f64, alpha: f64 },
}

impl GraphonModel {
    pub fn fourier_ring(coeffs: Vec<f64>) -> Result<Self> {
        let m = GraphonModel::FourierRing { coeffs };
        m.validate()?;
        Ok(m)
    }

    pub fn small_world(p: f64, q: f64, alpha: f64) -> Result<Self> {
        let m = GraphonModel::SmallWorld { p, q, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn erdos_renyi(p: f64) -> Result<Self> {
        let m = GraphonModel::ErdosRenyi { p };
        m.validate()?;
        Ok(m)
    }

    pub fn bipartite(p: f64, alpha: f64) -> Result<Self> {
        let m = GraphonModel::Bipartite { p, alpha };
        m.validate()?;
        Ok(m)
    }

    /// The two-mode kernel `1/2 + cos(2πd)/4 + cos(4πd)/4`, whose modes `k = 1, 2`
    /// share the eigenvalue `-3/8`.
    pub fn resonant() -> Self {
        GraphonModel::FourierRing {
            coeffs: vec![0.5, 0.125, 0.125],
        }
    }

    pub fn is_ring(&self) -> bool {
        !matches!(self, GraphonModel::Bipartite { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} = {v} is not in [0,1]")))
            }
        };
        match self {
            GraphonModel::FourierRing { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidModel("no Fourier coefficients".into()));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidModel("non-finite Fourier coefficient".into()));
                }
                for i in 0..VALIDATION_GRID {
                    let v = ring_series(coeffs, i as f64 / VALIDATION_GRID as f64);
                    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
                        return Err(Error::InvalidModel(format!(
                            "kernel value {v} at d = {} leaves [0,1]",
                            i as f64 / VALIDATION_GRID as f64
                        )));
                    }
                }
                Ok(())
            }
            GraphonModel::SmallWorld { p, q, alpha } => {
                prob("p", *p)?;
                prob("q", *q)?;
                if !(*alpha > 0.0 && *alpha <= 0.5) {
                    return Err(Error::InvalidModel(format!("alpha = {alpha} is not in (0, 1/2]")));
                }
                Ok(())
            }
            GraphonModel::ErdosRenyi { p } => prob("p", *p),
            GraphonModel::Bipartite { p, alpha } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidModel(format!("p = {p} is not in (0,1]")));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidModel(format!("alpha = {alpha} is not in (0,1)")));
                }
                Ok(())
            }
        }
    }

    /// Ring profile `R(d)` for ring variants, `d` in `[0,1)`.
    pub fn ring_profile(&self, d: f64) -> Result<f64> {
        let d = d.rem_euclid(1.0);
        Ok(match self {
            GraphonModel::FourierRing { coeffs } => ring_series(coeffs, d).clamp(0.0, 1.0),
            GraphonModel::SmallWorld { p, q, alpha } => {
                let dist = d.min(1.0 - d);
                if dist <= alpha + TIE_TOL {
                    *p
                } else {
                    *q
                }
            }
            GraphonModel::ErdosRenyi { p } => *p,
            GraphonModel::Bipartite { .. } => return Err(Error::NotRing),
        })
    }
}

fn ring_series(coeffs: &[f64], d: f64) -> f64 {
    let mut v = coeffs[0];
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        v += 2.0 * c * (2.0 * PI * k as f64 * d).cos();
    }
    v
}

/// Kernel value `W(x, y)`.
pub fn evaluate(model: &GraphonModel, x: f64, y: f64) -> f64 {
    match model {
        GraphonModel::Bipartite { p, alpha } => {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            if lo <= *alpha && *alpha < hi {
                *p
            } else {
                0.0
            }
        }
        _ => model
            .ring_profile((x - y).abs())
            .expect("ring variant"),
    }
}

/// Degree function `Deg(x) = ∫ W(x, y) dy`.
pub fn degree(model: &GraphonModel, x: f64) -> f64 {
    match model {
        GraphonModel::FourierRing { coeffs } => coeffs[0],
        GraphonModel::SmallWorld { p, q, alpha } => 2.0 * alpha * p + (1.0 - 2.0 * alpha) * q,
        GraphonModel::ErdosRenyi { p } => *p,
        GraphonModel::Bipartite { p, alpha } => {
            if x <= *alpha {
                p * (1.0 - alpha)
            } else {
                p * alpha
            }
        }
    }
}

/// Fourier coefficients `c_0, ..., c_K` of a ring profile.
pub fn fourier_coefficients(model: &GraphonModel, k_max: usize) -> Result<Vec<f64>> {
    match model {
        GraphonModel::FourierRing { coeffs } => Ok((0..=k_max)
            .map(|k| coeffs.get(k).copied().unwrap_or(0.0))
            .collect()),
        GraphonModel::SmallWorld { p, q, alpha } => Ok((0..=k_max)
            .map(|k| {
                if k == 0 {
                    degree(model, 0.0)
                } else {
                    let kf = k as f64;
                    (p - q) / (PI * kf) * (2.0 * PI * kf * alpha).sin()
                }
            })
            .collect()),
        GraphonModel::ErdosRenyi { p } => Ok((0..=k_max)
            .map(|k| if k == 0 { *p } else { 0.0 })
            .collect()),
        GraphonModel::Bipartite { .. } => Err(Error::NotRing),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub k: usize,
    pub lambda: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphonSpectrum {
    pub entries: Vec<SpectrumEntry>,
    pub accumulation_point: f64,
}

impl GraphonSpectrum {
    pub fn lambda(&self, k: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.lambda)
    }

    /// Half the distance from `mu` to the nearest other spectral value,
    /// the accumulation point included.
    pub fn isolation_radius(&self, mu: f64) -> f64 {
        let same = |v: f64| (v - mu).abs() <= 1e-12 * (1.0 + mu.abs());
        let nearest = self
            .entries
            .iter()
            .map(|e| e.lambda)
            .chain(std::iter::once(self.accumulation_point))
            .filter(|&v| !same(v))
            .map(|v| (v - mu).abs())
            .fold(f64::INFINITY, f64::min);
        0.5 * nearest
    }
}

/// Spectrum `λ_k = c_k - c_0` of the graphon Laplacian for `k = 0..=k_max`.
pub fn graphon_spectrum(model: &GraphonModel, k_max: usize) -> Result<GraphonSpectrum> {
    let c = fourier_coefficients(model, k_max)?;
    let entries = c
        .iter()
        .enumerate()
        .map(|(k, ck)| SpectrumEntry {
            k,
            lambda: ck - c[0],
            multiplicity: if k == 0 { 1 } else { 2 },
        })
        .collect();
    Ok(GraphonSpectrum {
        entries,
        accumulation_point: -c[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteEigenvalue {
    pub value: f64,
    /// One-dimensional eigenspace; the middle two values have infinite-dimensional ones.
    pub isolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteSpectrum {
    pub p: f64,
    pub alpha: f64,
    /// `0, -pα, -p(1-α), -p` in this order.
    pub eigenvalues: [BipartiteEigenvalue; 4],
}

impl BipartiteSpectrum {
    /// Levels of the eigenfunction for `-p` on `[0,α]` and `(α,1]`.
    pub fn step_levels(&self, c: f64) -> (f64, f64) {
        ((1.0 - self.alpha) * c, -self.alpha * c)
    }
}

pub fn bipartite_spectrum(p: f64, alpha: f64) -> Result<BipartiteSpectrum> {
    GraphonModel::Bipartite { p, alpha }.validate()?;
    let e = |value, isolated| BipartiteEigenvalue { value, isolated };
    Ok(BipartiteSpectrum {
        p,
        alpha,
        eigenvalues: [
            e(0.0, true),
            e(-p * alpha, false),
            e(-p * (1.0 - alpha), false),
            e(-p, true),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sw() -> GraphonModel {
        GraphonModel::small_world(0.90, 0.01, 0.20).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let er = GraphonModel::erdos_renyi(0.3).unwrap();
        assert_eq!(evaluate(&er, 0.1, 0.9), 0.3);
        assert_eq!(evaluate(&sw(), 0.10, 0.20), 0.90);
        assert_eq!(evaluate(&sw(), 0.05, 0.95), 0.90);
        assert_eq!(evaluate(&sw(), 0.1, 0.5), 0.01);
        assert_abs_diff_eq!(evaluate(&GraphonModel::resonant(), 0.3, 0.3), 1.0);
    }

    #[test]
    fn degree_examples() {
        assert_abs_diff_eq!(degree(&sw(), 0.42), 0.366, epsilon = 1e-15);
        let bp = GraphonModel::bipartite(0.5, 0.75).unwrap();
        assert_abs_diff_eq!(degree(&bp, 0.2), 0.125);
        assert_abs_diff_eq!(degree(&bp, 0.9), 0.375);
    }

    #[test]
    fn degree_matches_quadrature() {
        let n = 200_000;
        for model in [sw(), GraphonModel::resonant(), GraphonModel::bipartite(0.5, 0.75).unwrap()] {
            for x in [0.2, 0.8] {
                let q: f64 = (0..n)
                    .map(|i| evaluate(&model, x, (i as f64 + 0.5) / n as f64))
                    .sum::<f64>()
                    / n as f64;
                assert_abs_diff_eq!(q, degree(&model, x), epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        let c = fourier_coefficients(&sw(), 3).unwrap();
        assert_abs_diff_eq!(c[0], 0.366, epsilon = 1e-15);
        let c = fourier_coefficients(&GraphonModel::resonant(), 5).unwrap();
        assert_eq!(c, vec![0.5, 0.125, 0.125, 0.0, 0.0, 0.0]);
        let c = fourier_coefficients(&GraphonModel::erdos_renyi(0.4).unwrap(), 4).unwrap();
        assert!(c[1..].iter().all(|&v| v == 0.0));
        assert_eq!(
            fourier_coefficients(&GraphonModel::bipartite(0.5, 0.5).unwrap(), 2),
            Err(Error::NotRing)
        );
    }

    #[test]
    fn small_world_coefficients_match_quadrature() {
        // c_k = ∫ R(d) cos(2πkd) dd, midpoint rule
        let n = 400_000;
        let model = sw();
        let c = fourier_coefficients(&model, 4).unwrap();
        for (k, ck) in c.iter().enumerate() {
            let q: f64 = (0..n)
                .map(|i| {
                    let d = (i as f64 + 0.5) / n as f64;
                    model.ring_profile(d).unwrap() * (2.0 * PI * k as f64 * d).cos()
                })
                .sum::<f64>()
                / n as f64;
            assert_abs_diff_eq!(q, ck, epsilon = 1e-5);
        }
    }

    #[test]
    fn spectrum_examples() {
        let s = graphon_spectrum(&sw(), DEFAULT_K).unwrap();
        assert_eq!(s.entries[0].lambda, 0.0);
        assert_eq!(s.entries[0].multiplicity, 1);
        assert_abs_diff_eq!(s.lambda(1).unwrap(), -0.0966, epsilon = 5e-5);
        assert_abs_diff_eq!(s.accumulation_point, -0.366, epsilon = 1e-15);
        assert!(s.entries.iter().all(|e| e.lambda <= 0.0));

        let r = graphon_spectrum(&GraphonModel::resonant(), 8).unwrap();
        assert_eq!(r.lambda(1), Some(-0.375));
        assert_eq!(r.lambda(2), Some(-0.375));
        assert_eq!(r.lambda(3), Some(-0.5));
        assert_eq!(r.accumulation_point, -0.5);
    }

    #[test]
    fn isolation_radius_of_small_world_pair() {
        let s = graphon_spectrum(&sw(), DEFAULT_K).unwrap();
        let mu = s.lambda(1).unwrap();
        assert_abs_diff_eq!(s.isolation_radius(mu), 0.5 * mu.abs(), epsilon = 1e-15);
    }

    #[test]
    fn bipartite_examples() {
        let s = bipartite_spectrum(0.5, 0.75).unwrap();
        let v: Vec<f64> = s.eigenvalues.iter().map(|e| e.value).collect();
        assert_eq!(v, vec![0.0, -0.375, -0.125, -0.5]);
        assert!(s.eigenvalues[0].isolated && s.eigenvalues[3].isolated);
        assert!(!s.eigenvalues[1].isolated && !s.eigenvalues[2].isolated);
        assert_eq!(s.step_levels(1.0), (0.25, -0.75));
        let h = bipartite_spectrum(0.8, 0.5).unwrap();
        assert_eq!(h.eigenvalues[1].value, h.eigenvalues[2].value);
    }

    #[test]
    fn validation_rejects_bad_models() {
        assert!(GraphonModel::fourier_ring(vec![0.5, 0.3]).is_err());
        assert!(GraphonModel::fourier_ring(vec![]).is_err());
        assert!(GraphonModel::small_world(1.2, 0.0, 0.1).is_err());
        assert!(GraphonModel::small_world(0.9, 0.0, 0.6).is_err());
        assert!(GraphonModel::bipartite(0.0, 0.5).is_err());
        assert!(GraphonModel::bipartite(0.5, 1.0).is_err());
        assert!(GraphonModel::fourier_ring(vec![0.5, 0.125, 0.125]).is_ok());
    }
}
