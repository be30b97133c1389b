//! Leading-order center-manifold predictions for graphon and graph Turing bifurcations.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::graphon::GraphonSpectrum;
use crate::sampler::grid;
use crate::spectral::{AlignmentReport, SpectralData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedSpectrum {
    pub kappa: f64,
    /// `-(λ_k - κ)²` in the order of the input eigenvalues.
    pub entries: Vec<f64>,
}

pub fn shifted_spectrum(lambdas: &[f64], kappa: f64) -> ShiftedSpectrum {
    ShiftedSpectrum {
        kappa,
        entries: lambdas.iter().map(|l| -(l - kappa).powi(2)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Supercritical,
    Subcritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphonPrediction {
    pub k_star: usize,
    pub kappa: f64,
    pub gamma: f64,
    pub criticality: Criticality,
}

/// `3b + 4r²/ℓ₀ + 2r²/ℓ_{2k*}`.
pub fn pitchfork_coefficient(ell0: f64, ell2k: f64, r: f64, b: f64) -> f64 {
    3.0 * b + 4.0 * r * r / ell0 + 2.0 * r * r / ell2k
}

impl GraphonPrediction {
    /// Amplitude `2√(ε/Γ)` of the bifurcating pattern, when real.
    pub fn amplitude(&self, epsilon: f64) -> Option<f64> {
        let s = epsilon / self.gamma;
        (s >= 0.0).then(|| 2.0 * s.sqrt())
    }

    pub fn profile(&self, x: f64, epsilon: f64, phi: f64) -> Option<f64> {
        self.amplitude(epsilon)
            .map(|a| a * (2.0 * PI * self.k_star as f64 * (x - phi)).cos())
    }
}

/// Pitchfork prediction at `κ = λ_{k*}` for a ring graphon.
pub fn pitchfork(spectrum: &GraphonSpectrum, k_star: usize, r: f64, b: f64) -> Result<GraphonPrediction> {
    if k_star == 0 {
        return Err(Error::InvalidInput("critical mode must be nonzero".into()));
    }
    let lam = |k: usize| spectrum.lambda(k).unwrap_or(spectrum.accumulation_point);
    let kappa = spectrum
        .lambda(k_star)
        .ok_or_else(|| Error::InvalidInput(format!("mode {k_star} not in spectrum")))?;
    let ell0 = -(lam(0) - kappa).powi(2);
    let ell2k = -(lam(2 * k_star) - kappa).powi(2);
    if ell0 == 0.0 || ell2k == 0.0 {
        return Err(Error::Degenerate(format!(
            "vanishing shifted eigenvalue (ℓ₀ = {ell0}, ℓ_2k = {ell2k})"
        )));
    }
    let gamma = pitchfork_coefficient(ell0, ell2k, r, b);
    Ok(GraphonPrediction {
        k_star,
        kappa,
        gamma,
        criticality: if gamma > 0.0 {
            Criticality::Supercritical
        } else {
            Criticality::Subcritical
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonancePrediction {
    pub k1: usize,
    pub k2: usize,
    pub sign: Sign,
    pub epsilon: f64,
    pub phi: f64,
    /// Amplitude of the `k1` harmonic, `±√2 ε/r`.
    pub eta1: f64,
    /// Amplitude of the `k2 = 2k1` harmonic, `-ε/r`.
    pub eta2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl ResonancePrediction {
    pub fn profile(&self, x: f64) -> f64 {
        self.eta1 * (2.0 * PI * self.k1 as f64 * (x - self.omega1)).cos()
            + self.eta2 * (2.0 * PI * self.k2 as f64 * (x - self.omega2)).cos()
    }

    pub fn sample(&self, n: usize) -> Vec<f64> {
        grid(n).into_iter().map(|x| self.profile(x)).collect()
    }
}

/// Two-mode steady state at a 2:1 resonance.
pub fn resonance(k1: usize, r: f64, epsilon: f64, phi: f64, sign: Sign) -> Result<ResonancePrediction> {
    if r == 0.0 {
        return Err(Error::InvalidInput("resonant expansion needs r != 0".into()));
    }
    if k1 == 0 {
        return Err(Error::InvalidInput("k1 must be nonzero".into()));
    }
    Ok(ResonancePrediction {
        k1,
        k2: 2 * k1,
        sign,
        epsilon,
        phi,
        eta1: sign.value() * SQRT_2 * epsilon / r,
        eta2: -epsilon / r,
        omega1: phi,
        omega2: phi,
    })
}

/// `3b/2 + 2r²/l_N + r²/l₃`.
pub fn gamma_r(r: f64, b: f64, l_n: f64, l3: f64) -> f64 {
    1.5 * b + 2.0 * r * r / l_n + r * r / l3
}

/// Roots `z₁±` of `ε + rβz - Γ_r z² = 0`, `None` past the saddle-node.
pub fn z1_roots(beta: f64, r: f64, gamma_r: f64, epsilon: f64) -> Option<(f64, f64)> {
    let br = beta * r;
    let disc = br * br + 4.0 * gamma_r * epsilon;
    let roundoff = 4.0 * f64::EPSILON * (br * br + (4.0 * gamma_r * epsilon).abs());
    if disc < -roundoff {
        return None;
    }
    let s = disc.max(0.0).sqrt();
    Some(((br + s) / (2.0 * gamma_r), (br - s) / (2.0 * gamma_r)))
}

/// `-β²r²/(4Γ_r)`.
pub fn saddle_node_epsilon(beta: f64, r: f64, gamma_r: f64) -> f64 {
    -beta * beta * r * r / (4.0 * gamma_r)
}

/// Coefficients of `dz̃/dτ = ε̃z̃ + q z̃² - c z̃³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledNormalForm {
    pub linear: f64,
    pub quadratic: f64,
    pub cubic: f64,
}

/// The graph-scale equation `ż₁ = εz₁ + rβz₁² - Γ_r z₁³` under
/// `ε = ε̃N²`, `r = r̃N²`, `b = b̃N²`, `z₁ = √2 z̃`, `t = τN⁻²`.
/// With `l_N = N²ℓ₀` and `l₃ = N²ℓ_{2k*}` the cubic is the graphon pitchfork coefficient.
pub fn rescale_normal_form(n: usize, epsilon: f64, beta: f64, r: f64, b: f64, l_n: f64, l3: f64) -> RescaledNormalForm {
    let n2 = (n as f64).powi(2);
    RescaledNormalForm {
        linear: epsilon / n2,
        quadratic: SQRT_2 * r * beta / n2,
        cubic: 2.0 * gamma_r(r, b, l_n, l3) / n2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPrediction {
    pub n: usize,
    pub k_star: usize,
    pub kappa: f64,
    pub beta: f64,
    pub r: f64,
    pub b: f64,
    pub l_n: f64,
    pub l3: f64,
    pub lambda3: f64,
    pub gamma_r: f64,
    pub epsilon_sn: f64,
    pub omega: f64,
}

impl RandomPrediction {
    pub fn z1(&self, epsilon: f64) -> Option<(f64, f64)> {
        z1_roots(self.beta, self.r, self.gamma_r, epsilon)
    }

    /// `z₁⁻` when `βr > 0`, else `z₁⁺`.
    pub fn z_star(&self, epsilon: f64) -> Option<f64> {
        self.z1(epsilon)
            .map(|(p, m)| if self.beta * self.r > 0.0 { m } else { p })
    }

    /// Node profile `√2 z* cos(2πk*(x_j - Ω))` on the grid `x_j = j/N`.
    pub fn profile(&self, epsilon: f64) -> Option<DVector<f64>> {
        let z = self.z_star(epsilon)?;
        let x = grid(self.n);
        Some(DVector::from_fn(self.n, |i, _| {
            SQRT_2 * z * (2.0 * PI * self.k_star as f64 * (x[i] - self.omega)).cos()
        }))
    }

    /// Projection `⟨v, u⟩ = √N z` of the profile on the critical eigenvector.
    pub fn amplitude(&self, z: f64) -> f64 {
        (self.n as f64).sqrt() * z
    }
}

/// Graph-level normal form from a spectrum whose matched top eigenvalue is `κ`.
/// `l₃` uses the eigenvalue closest to `target_2k` (the graph-scale `N λ_{2k*}`),
/// which must lie within `radius` of it.
pub fn random_prediction(
    spec: &SpectralData,
    alignment: &AlignmentReport,
    target_2k: f64,
    radius: f64,
    r: f64,
    b: f64,
) -> Result<RandomPrediction> {
    let n = spec.n();
    let &top = alignment.matched.first().ok_or(Error::EmptyMatch)?;
    let kappa = spec.eigenvalues[top];
    let lambda3 = spec
        .eigenvalues
        .iter()
        .copied()
        .min_by(|a, b| (a - target_2k).abs().total_cmp(&(b - target_2k).abs()))
        .ok_or(Error::EmptyMatch)?;
    if (lambda3 - target_2k).abs() > radius {
        return Err(Error::Degenerate(format!(
            "no eigenvalue within {radius} of {target_2k}"
        )));
    }
    let l_n = -kappa * kappa;
    let l3 = -(lambda3 - kappa).powi(2);
    if l_n == 0.0 || l3 == 0.0 {
        return Err(Error::Degenerate("vanishing l_N or l_3".into()));
    }
    let g = gamma_r(r, b, l_n, l3);
    let a1 = alignment.coefficient(0);
    Ok(RandomPrediction {
        n,
        k_star: alignment.k_star,
        kappa,
        beta: alignment.beta,
        r,
        b,
        l_n,
        l3,
        lambda3,
        gamma_r: g,
        epsilon_sn: saddle_node_epsilon(alignment.beta, r, g),
        omega: -a1.arg() / (2.0 * PI * alignment.k_star as f64),
    })
}
