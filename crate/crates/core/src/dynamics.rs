//! Graph Swift–Hohenberg equation `u' = -(L-κI)²u + εu + ru² - bu³`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::eigenvalues_sym;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SHParams {
    pub kappa: f64,
    pub epsilon: f64,
    pub r: f64,
    pub b: f64,
}

impl SHParams {
    pub fn new(kappa: f64, epsilon: f64, r: f64, b: f64) -> Result<Self> {
        let p = SHParams { kappa, epsilon, r, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(Error::InvalidInput(format!("b = {} must be positive", self.b)));
        }
        if !(self.kappa < 0.0) {
            return Err(Error::InvalidInput(format!("kappa = {} must be negative", self.kappa)));
        }
        if !(self.epsilon.is_finite() && self.r.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        SHParams { epsilon, ..*self }
    }
}

/// Laplacian together with the cached linear operator `-(L-κI)²`.
#[derive(Debug, Clone)]
pub struct SwiftHohenberg {
    pub laplacian: DMatrix<f64>,
    pub kappa: f64,
    linear: DMatrix<f64>,
}

impl SwiftHohenberg {
    pub fn new(laplacian: &DMatrix<f64>, kappa: f64) -> Result<Self> {
        let n = laplacian.nrows();
        if laplacian.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: laplacian.ncols(),
            });
        }
        let shifted = laplacian - DMatrix::identity(n, n) * kappa;
        let mut linear = &shifted * &shifted;
        linear.neg_mut();
        // symmetrize away rounding in the product
        let linear = (&linear + linear.transpose()) * 0.5;
        Ok(SwiftHohenberg {
            laplacian: laplacian.clone(),
            kappa,
            linear,
        })
    }

    pub fn n(&self) -> usize {
        self.laplacian.nrows()
    }

    /// `-(L-κI)²`.
    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    fn check(&self, u: &DVector<f64>, p: &SHParams) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: u.len(),
            });
        }
        if p.kappa != self.kappa {
            return Err(Error::InvalidInput("kappa differs from the cached operator".into()));
        }
        Ok(())
    }

    pub fn nonlinearity(u: &DVector<f64>, p: &SHParams) -> DVector<f64> {
        u.map(|x| p.r * x * x - p.b * x * x * x)
    }

    pub fn rhs(&self, u: &DVector<f64>, p: &SHParams) -> Result<DVector<f64>> {
        self.check(u, p)?;
        let mut f = &self.linear * u;
        for (fi, &x) in f.iter_mut().zip(u.iter()) {
            *fi += p.epsilon * x + p.r * x * x - p.b * x * x * x;
        }
        Ok(f)
    }

    pub fn jacobian(&self, u: &DVector<f64>, p: &SHParams) -> Result<DMatrix<f64>> {
        self.check(u, p)?;
        let mut j = self.linear.clone();
        for (i, &x) in u.iter().enumerate() {
            j[(i, i)] += p.epsilon + 2.0 * p.r * x - 3.0 * p.b * x * x;
        }
        Ok(j)
    }

    /// Lyapunov functional whose negative gradient is the right-hand side.
    pub fn energy(&self, u: &DVector<f64>, p: &SHParams) -> Result<f64> {
        self.check(u, p)?;
        let quad = -0.5 * u.dot(&(&self.linear * u));
        let local: f64 = u
            .iter()
            .map(|&x| -0.5 * p.epsilon * x * x - p.r / 3.0 * x * x * x + p.b / 4.0 * x.powi(4))
            .sum();
        Ok(quad + local)
    }
}

pub fn rhs(u: &DVector<f64>, p: &SHParams, l: &DMatrix<f64>) -> Result<DVector<f64>> {
    SwiftHohenberg::new(l, p.kappa)?.rhs(u, p)
}

pub fn jacobian(u: &DVector<f64>, p: &SHParams, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    SwiftHohenberg::new(l, p.kappa)?.jacobian(u, p)
}

pub fn energy(u: &DVector<f64>, p: &SHParams, l: &DMatrix<f64>) -> Result<f64> {
    SwiftHohenberg::new(l, p.kappa)?.energy(u, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub t_end: f64,
    /// Step-doubling error tolerance relative to `max(1, ‖u‖∞)`.
    pub tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Stop early once `‖rhs‖₂` falls below this value.
    pub steady_tol: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            t_end: 100.0,
            tol: 1e-6,
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 1e3,
            steady_tol: None,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub energies: Vec<f64>,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Semi-implicit gradient-flow integrator: the linear part is solved exactly in
/// the eigenbasis of `L`, the polynomial part is explicit. Steps that raise
/// the energy or fail the step-doubling test are retried with half the step.
pub fn integrate(
    u0: &DVector<f64>,
    p: &SHParams,
    l: &DMatrix<f64>,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let sys = SwiftHohenberg::new(l, p.kappa)?;
    sys.check(u0, p)?;
    if u0.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite initial state".into()));
    }
    let eig = l.clone().symmetric_eigen();
    let q = eig.eigenvectors;
    let qt = q.transpose();
    let growth: DVector<f64> = eig
        .eigenvalues
        .map(|lam| -(lam - p.kappa).powi(2) + p.epsilon);
    let max_growth = growth.max();
    let dt_cap = if max_growth > 0.0 {
        opts.dt_max.min(0.5 / max_growth)
    } else {
        opts.dt_max
    };

    let step = |u: &DVector<f64>, dt: f64| -> DVector<f64> {
        let rhs = u + SwiftHohenberg::nonlinearity(u, p) * dt;
        let mut c = &qt * rhs;
        for (ci, g) in c.iter_mut().zip(growth.iter()) {
            *ci /= 1.0 - dt * g;
        }
        &q * c
    };

    let mut u = u0.clone();
    let mut t = 0.0;
    let mut e = sys.energy(&u, p)?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u.clone()],
        energies: vec![e],
        rejected: 0,
    };
    let mut dt = opts.dt_init.min(dt_cap);
    let mut steps = 0;
    while t < opts.t_end && steps < opts.max_steps {
        if let Some(st) = opts.steady_tol {
            if sys.rhs(&u, p)?.norm() <= st {
                break;
            }
        }
        let h = dt.min(opts.t_end - t);
        let full = step(&u, h);
        let half = step(&step(&u, 0.5 * h), 0.5 * h);
        let err = (&full - &half).amax() / u.amax().max(1.0);
        let e_new = sys.energy(&half, p)?;
        let finite = half.iter().all(|x| x.is_finite());
        if finite && err <= opts.tol && e_new <= e + 1e-12 * e.abs().max(1.0) {
            t += h;
            u = half;
            e = e_new;
            traj.times.push(t);
            traj.states.push(u.clone());
            traj.energies.push(e);
            steps += 1;
            let grow = if err > 0.0 {
                (0.9 * (opts.tol / err).sqrt()).min(2.0)
            } else {
                2.0
            };
            dt = (h * grow.max(1.0)).min(dt_cap);
        } else {
            traj.rejected += 1;
            dt = 0.5 * h;
            if dt < opts.dt_min {
                return Err(Error::Stiffness { t });
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub u: DVector<f64>,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
}

pub fn default_newton_tol(n: usize) -> f64 {
    1e-10 * (n as f64).sqrt()
}

/// Damped Newton iteration for `rhs(u) = 0`.
pub fn newton_steady(
    u_guess: &DVector<f64>,
    p: &SHParams,
    l: &DMatrix<f64>,
    tol: Option<f64>,
) -> Result<NewtonOutcome> {
    let sys = SwiftHohenberg::new(l, p.kappa)?;
    newton_with(&sys, u_guess, p, tol.unwrap_or(default_newton_tol(l.nrows())), 50)
}

pub(crate) fn lu_is_singular(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> bool {
    let u = lu.u();
    let d = u.diagonal();
    let scale = d.amax();
    scale == 0.0 || d.iter().any(|x| x.abs() <= 1e-14 * scale)
}

pub(crate) fn newton_with(
    sys: &SwiftHohenberg,
    u_guess: &DVector<f64>,
    p: &SHParams,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    if u_guess.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite guess".into()));
    }
    let mut u = u_guess.clone();
    let mut f = sys.rhs(&u, p)?;
    let mut res = f.norm();
    for it in 0..max_iter {
        if res <= tol {
            return Ok(NewtonOutcome {
                u,
                converged: true,
                residual: res,
                iterations: it,
            });
        }
        let lu = sys.jacobian(&u, p)?.lu();
        if lu_is_singular(&lu) {
            return Err(Error::Singular);
        }
        let du = lu.solve(&(-&f)).ok_or(Error::Singular)?;
        let mut lambda = 1.0;
        loop {
            let trial = &u + &du * lambda;
            let ft = sys.rhs(&trial, p)?;
            let rt = ft.norm();
            if rt < res || lambda < 1e-4 {
                u = trial;
                f = ft;
                res = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    Ok(NewtonOutcome {
        converged: res <= tol,
        u,
        residual: res,
        iterations: max_iter,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Largest Jacobian eigenvalues, descending.
    pub leading: Vec<f64>,
    pub stable: bool,
    pub threshold: f64,
}

/// Spectral scale `max(1, |ℓ_(2)|)` where `ℓ_(2)` is the second largest of `-(λ_k-κ)²`.
pub fn stability_scale(laplacian_eigenvalues: &[f64], kappa: f64) -> f64 {
    let mut ell: Vec<f64> = laplacian_eigenvalues
        .iter()
        .map(|l| -(l - kappa).powi(2))
        .collect();
    ell.sort_by(|a, b| b.total_cmp(a));
    ell.get(1).map_or(1.0, |v| v.abs().max(1.0))
}

pub fn stability(u_star: &DVector<f64>, p: &SHParams, l: &DMatrix<f64>) -> Result<StabilityReport> {
    let sys = SwiftHohenberg::new(l, p.kappa)?;
    let ev = eigenvalues_sym(&sys.jacobian(u_star, p)?)?;
    let threshold = -1e-8 * stability_scale(&eigenvalues_sym(l)?, p.kappa);
    Ok(StabilityReport {
        stable: ev[0] <= threshold,
        leading: ev.iter().take(5).copied().collect(),
        threshold,
    })
}
