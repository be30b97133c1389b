//! Pseudo-arclength continuation of Swift–Hohenberg steady states in `ε`.
//!
//! Unknowns are `(y, ε)` with `u = P y` for an orthonormal basis `P` of an
//! invariant subspace (the identity when no basis is given). Restricting to the
//! reflection-symmetric subspace of a circulant graph removes the neutral
//! translation mode so the corrector stays regular along the whole branch.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::dynamics::{default_newton_tol, stability_scale, SHParams, SwiftHohenberg};
use crate::error::{Error, Result};
use crate::spectral::eigenvalues_sym;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controls {
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    pub newton_max_iter: usize,
    /// Stop once `‖u‖∞` exceeds this value.
    pub amplitude_cap: f64,
    pub epsilon_min: f64,
    pub epsilon_max: f64,
    /// Residual tolerance on `‖rhs‖₂`.
    pub tol: f64,
    /// Offset along the critical vector used for branch switching.
    pub h0: f64,
}

impl Controls {
    pub fn for_size(n: usize) -> Self {
        let s = (n as f64).sqrt();
        Controls {
            ds_init: 1e-7 * s,
            ds_min: 1e-12 * s,
            ds_max: 0.05 * s,
            max_steps: 2000,
            newton_max_iter: 10,
            amplitude_cap: 10.0,
            epsilon_min: -0.05,
            epsilon_max: 0.05,
            tol: default_newton_tol(n),
            h0: 1e-7 * s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.ds_min > 0.0
            && self.ds_min <= self.ds_init
            && self.ds_init <= self.ds_max
            && self.max_steps > 0
            && self.newton_max_iter > 0
            && self.amplitude_cap > 0.0
            && self.epsilon_min < self.epsilon_max
            && self.tol > 0.0
            && self.h0 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("inconsistent continuation controls {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub epsilon: f64,
    pub u: DVector<f64>,
    /// Signed projection `⟨v_crit, u⟩`.
    pub amplitude: f64,
    pub supnorm: f64,
    pub stable: bool,
    /// Unit tangent in `(u, ε)`.
    pub tangent_u: DVector<f64>,
    pub tangent_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Fold {
        epsilon: f64,
        amplitude: f64,
        /// Index of the first point past the turn.
        index: usize,
    },
    BranchPoint {
        epsilon: f64,
        amplitude: f64,
        index: usize,
        #[serde(skip)]
        u: Vec<f64>,
    },
}

impl Event {
    pub fn epsilon(&self) -> f64 {
        match self {
            Event::Fold { epsilon, .. } | Event::BranchPoint { epsilon, .. } => *epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StepBudget,
    AmplitudeCap,
    EpsilonRange,
    CorrectorFailure,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Branch {
    pub points: Vec<Point>,
    pub events: Vec<Event>,
    pub terminations: Vec<Termination>,
}

impl Branch {
    pub fn folds(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| matches!(e, Event::Fold { .. }))
    }
}

/// Orthonormal basis of vectors with `u_i = u_{(N-2-i) mod N}`, i.e. even under
/// the reflection `x ↦ -x` of the grid `x_j = j/N`.
pub fn reflection_basis(n: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let j = (2 * n - 2 - i) % n;
        if j < i {
            continue;
        }
        let mut c = DVector::zeros(n);
        if j == i {
            c[i] = 1.0;
        } else {
            c[i] = s;
            c[j] = s;
        }
        cols.push(c);
    }
    DMatrix::from_columns(&cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchCandidate {
    pub epsilon: f64,
    pub multiplicity: usize,
}

/// Values of `ε` in `[eps_min, eps_max]` where some `ℓ_k + ε` crosses zero,
/// grouping crossings within `tie_tol`.
pub fn trivial_branch_scan(
    laplacian_eigenvalues: &[f64],
    kappa: f64,
    eps_min: f64,
    eps_max: f64,
    tie_tol: f64,
) -> Vec<BranchCandidate> {
    let mut eps: Vec<f64> = laplacian_eigenvalues
        .iter()
        .map(|l| (l - kappa).powi(2))
        .filter(|e| (eps_min..=eps_max).contains(e))
        .collect();
    eps.sort_by(f64::total_cmp);
    let mut out: Vec<BranchCandidate> = Vec::new();
    for e in eps {
        match out.last_mut() {
            Some(c) if (e - c.epsilon).abs() <= tie_tol => c.multiplicity += 1,
            _ => out.push(BranchCandidate {
                epsilon: e,
                multiplicity: 1,
            }),
        }
    }
    out
}

struct Corrected {
    x: DVector<f64>,
    lu: LU<f64, Dyn, Dyn>,
    jy: DMatrix<f64>,
}

const NOISE_FACTOR: f64 = 1e3;

/// Resolution of `ε` along a branch: round-off in `(L - κ)²u` relative to `u`.
pub fn noise_floor(sys: &SwiftHohenberg) -> f64 {
    NOISE_FACTOR * f64::EPSILON * sys.linear().amax()
}

/// Continuation problem for fixed `(κ, r, b)` on a given graph.
pub struct Continuation<'a> {
    sys: &'a SwiftHohenberg,
    params: SHParams,
    basis: Option<DMatrix<f64>>,
    reduced_linear: DMatrix<f64>,
    v_crit: DVector<f64>,
    v_reduced: DVector<f64>,
    threshold: f64,
    eps_noise: f64,
    pub controls: Controls,
}

impl<'a> Continuation<'a> {
    pub fn new(
        sys: &'a SwiftHohenberg,
        params: SHParams,
        basis: Option<DMatrix<f64>>,
        v_crit: &DVector<f64>,
        controls: Controls,
    ) -> Result<Self> {
        params.validate()?;
        controls.validate()?;
        let n = sys.n();
        if v_crit.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v_crit.len(),
            });
        }
        if params.kappa != sys.kappa {
            return Err(Error::InvalidInput("kappa differs from the operator".into()));
        }
        let v_crit = v_crit.normalize();
        let (reduced_linear, v_reduced) = match &basis {
            Some(p) => {
                if p.nrows() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: p.nrows(),
                    });
                }
                let vr = p.transpose() * &v_crit;
                if (vr.norm() - 1.0).abs() > 1e-8 {
                    return Err(Error::InvalidInput(
                        "critical vector is not in the continuation subspace".into(),
                    ));
                }
                (p.transpose() * sys.linear() * p, vr)
            }
            None => (sys.linear().clone(), v_crit.clone()),
        };
        let threshold = 1e-8 * stability_scale(&eigenvalues_sym(&sys.laplacian)?, params.kappa);
        Ok(Continuation {
            sys,
            params,
            basis,
            reduced_linear,
            v_crit,
            v_reduced,
            threshold,
            eps_noise: noise_floor(sys),
            controls,
        })
    }

    fn dim(&self) -> usize {
        self.v_reduced.len()
    }

    fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(p) => p * y,
            None => y.clone(),
        }
    }

    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let m = self.dim();
        (x.rows(0, m).into_owned(), x[m])
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let (y, eps) = self.split(x);
        let u = self.lift(&y);
        let mut f = &self.reduced_linear * &y;
        let g = u.map(|v| self.params.r * v * v - self.params.b * v * v * v);
        let g = match &self.basis {
            Some(p) => p.transpose() * g,
            None => g,
        };
        f += g + &y * eps;
        f
    }

    fn reduced_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (y, eps) = self.split(x);
        let u = self.lift(&y);
        let d = u.map(|v| eps + 2.0 * self.params.r * v - 3.0 * self.params.b * v * v);
        match &self.basis {
            Some(p) => {
                let mut dp = p.clone();
                for (i, mut row) in dp.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                &self.reduced_linear + p.transpose() * dp
            }
            None => {
                let mut j = self.reduced_linear.clone();
                for i in 0..d.len() {
                    j[(i, i)] += d[i];
                }
                j
            }
        }
    }

    fn bordered(&self, jy: &DMatrix<f64>, x: &DVector<f64>, row: &DVector<f64>) -> DMatrix<f64> {
        let m = self.dim();
        let mut a = DMatrix::zeros(m + 1, m + 1);
        a.view_mut((0, 0), (m, m)).copy_from(jy);
        a.view_mut((0, m), (m, 1)).copy_from(&x.rows(0, m));
        a.view_mut((m, 0), (1, m + 1)).copy_from(&row.transpose());
        a
    }

    /// Newton on `{F(x) = 0, row·x = target}`.
    fn solve_constrained(&self, guess: DVector<f64>, row: &DVector<f64>, target: f64) -> Option<Corrected> {
        let m = self.dim();
        let mut x = guess;
        let mut last_dx = f64::INFINITY;
        let mut prev_dx = f64::INFINITY;
        for it in 0..=self.controls.newton_max_iter {
            let f = self.residual(&x);
            let jy = self.reduced_jacobian(&x);
            let lu = self.bordered(&jy, &x, row).lu();
            // a step that no longer contracts has reached the round-off floor
            let settled = last_dx <= 1e-10 * x.norm() || (it > 1 && last_dx >= 0.5 * prev_dx);
            if it > 0 && f.norm() <= self.controls.tol && settled {
                return Some(Corrected { x, lu, jy });
            }
            if it == self.controls.newton_max_iter || !x.iter().all(|v| v.is_finite()) {
                return None;
            }
            let mut rhs = DVector::zeros(m + 1);
            rhs.rows_mut(0, m).copy_from(&(-&f));
            rhs[m] = target - row.dot(&x);
            let dx = lu.solve(&rhs)?;
            prev_dx = last_dx;
            last_dx = dx.norm();
            x += dx;
        }
        None
    }

    fn tangent(&self, c: &Corrected, prev: &DVector<f64>) -> DVector<f64> {
        let m = self.dim();
        let mut e = DVector::zeros(m + 1);
        e[m] = 1.0;
        let t = c.lu.solve(&e).unwrap_or_else(|| prev.clone());
        let t = t.normalize();
        if t.dot(prev) < 0.0 {
            -t
        } else {
            t
        }
    }

    fn det_sign(lu: &LU<f64, Dyn, Dyn>) -> f64 {
        let mut s: f64 = lu.p().determinant();
        for d in lu.u().diagonal().iter() {
            s *= d.signum();
        }
        s
    }

    fn is_stable(&self, jy: &DMatrix<f64>) -> bool {
        let m = jy.nrows();
        let neg = -jy - DMatrix::identity(m, m) * self.threshold;
        neg.cholesky().is_some()
    }

    fn make_point(&self, x: &DVector<f64>, t: &DVector<f64>, jy: &DMatrix<f64>) -> Point {
        let (y, eps) = self.split(x);
        let (ty, te) = self.split(t);
        let u = self.lift(&y);
        Point {
            epsilon: eps,
            amplitude: self.v_reduced.dot(&y),
            supnorm: u.amax(),
            stable: self.is_stable(jy),
            u,
            tangent_u: self.lift(&ty),
            tangent_epsilon: te,
        }
    }

    fn stack(&self, y: &DVector<f64>, eps: f64) -> DVector<f64> {
        let m = self.dim();
        let mut x = DVector::zeros(m + 1);
        x.rows_mut(0, m).copy_from(y);
        x[m] = eps;
        x
    }

    fn reduce(&self, u: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(p) => p.transpose() * u,
            None => u.clone(),
        }
    }

    fn amplitude_row(&self) -> DVector<f64> {
        self.stack(&self.v_reduced, 0.0)
    }

    /// Steady state with `⟨v_crit, u⟩ = h` near the branch point at `eps_bp`.
    pub fn switch_branch(&self, eps_bp: f64, h: f64) -> Option<Point> {
        let row = self.amplitude_row();
        let guess = self.stack(&(&self.v_reduced * h), eps_bp);
        let c = self.solve_constrained(guess, &row, h)?;
        let t = self.tangent(&c, &row);
        Some(self.make_point(&c.x, &t, &c.jy))
    }

    /// Both halves of the nontrivial branch through the branch point at `eps_bp`,
    /// ordered by increasing amplitude.
    pub fn bifurcating_branch(&self, eps_bp: f64) -> Result<Branch> {
        let mut sides = Vec::new();
        for sign in [-1.0, 1.0] {
            let h = sign * self.controls.h0;
            let row = self.amplitude_row();
            let a = self.solve_constrained(self.stack(&(&self.v_reduced * h), eps_bp), &row, h);
            let b = a.as_ref().and_then(|a| {
                let mut g = a.x.clone() * 2.0;
                let m = self.dim();
                g[m] = a.x[m];
                self.solve_constrained(g, &row, 2.0 * h)
            });
            match (a, b) {
                (Some(a), Some(b)) => {
                    let secant = (&b.x - &a.x).normalize();
                    let ta = self.tangent(&a, &secant);
                    let start = self.make_point(&a.x, &ta, &a.jy);
                    let side = self.continue_from(start, b.x.clone(), secant)?;
                    sides.push(side);
                }
                _ => sides.push(Branch {
                    terminations: vec![Termination::CorrectorFailure],
                    ..Default::default()
                }),
            }
        }
        if sides.iter().all(|s| s.points.is_empty()) {
            return Err(Error::NoConvergence("branch switching failed for both signs".into()));
        }
        let plus = sides.pop().expect("two sides");
        let minus = sides.pop().expect("two sides");
        let offset = minus.points.len();
        let mut out = Branch::default();
        out.points.extend(minus.points.into_iter().rev().map(|mut p| {
            p.tangent_u.neg_mut();
            p.tangent_epsilon = -p.tangent_epsilon;
            p
        }));
        out.events.extend(minus.events.into_iter().map(|e| reindex(e, |i| offset - 1 - i)));
        out.events.push(Event::BranchPoint {
            epsilon: eps_bp,
            amplitude: 0.0,
            index: offset,
            u: vec![0.0; self.sys.n()],
        });
        if let (Some(a), Some(b)) = (out.points.last(), plus.points.first()) {
            if a.tangent_epsilon.signum() != b.tangent_epsilon.signum() {
                let (eps, amp) = parabola_vertex([
                    (a.amplitude, a.epsilon),
                    (0.0, eps_bp),
                    (b.amplitude, b.epsilon),
                ])
                .unwrap_or((eps_bp, 0.0));
                if (eps - eps_bp).abs() > self.eps_noise {
                    out.events.push(Event::Fold {
                        epsilon: eps,
                        amplitude: amp,
                        index: offset,
                    });
                }
            }
        }
        out.points.extend(plus.points);
        out.events.extend(plus.events.into_iter().map(|e| reindex(e, |i| offset + i)));
        out.terminations = minus.terminations;
        out.terminations.extend(plus.terminations);
        Ok(out)
    }

    /// Pseudo-arclength continuation from a solution in the direction of `tangent`.
    pub fn continue_branch(&self, start_u: &DVector<f64>, epsilon: f64, tangent_u: &DVector<f64>, tangent_epsilon: f64) -> Result<Branch> {
        let x0 = self.stack(&self.reduce(start_u), epsilon);
        let t0 = self.stack(&self.reduce(tangent_u), tangent_epsilon).normalize();
        if self.residual(&x0).norm() > self.controls.tol {
            return Err(Error::InvalidInput("start point is not a steady state".into()));
        }
        let jy = self.reduced_jacobian(&x0);
        let lu = self.bordered(&jy, &x0, &t0).lu();
        let c0 = Corrected { x: x0, lu, jy };
        let t = self.tangent(&c0, &t0);
        let start = self.make_point(&c0.x, &t, &c0.jy);
        let x1 = &c0.x + &t * self.controls.ds_init;
        self.continue_from_predicted(start, c0, t, x1)
    }

    fn continue_from(&self, start: Point, next_guess: DVector<f64>, secant: DVector<f64>) -> Result<Branch> {
        let x0 = self.stack(&self.reduce(&start.u), start.epsilon);
        let t0 = self
            .stack(&self.reduce(&start.tangent_u), start.tangent_epsilon)
            .normalize();
        let t0 = if t0.dot(&secant) < 0.0 { -t0 } else { t0 };
        let jy = self.reduced_jacobian(&x0);
        let lu = self.bordered(&jy, &x0, &t0).lu();
        let c0 = Corrected { x: x0, lu, jy };
        self.continue_from_predicted(start, c0, t0, next_guess)
    }

    fn continue_from_predicted(
        &self,
        start: Point,
        c0: Corrected,
        t0: DVector<f64>,
        first_target: DVector<f64>,
    ) -> Result<Branch> {
        let m = self.dim();
        let ctl = &self.controls;
        let mut branch = Branch::default();
        let mut x = c0.x.clone();
        let mut t = t0;
        let mut det = Self::det_sign(&c0.lu);
        let eps_ref = start.epsilon;
        branch.points.push(start);
        let mut ds = (&first_target - &x).norm().clamp(ctl.ds_min, ctl.ds_max);
        let mut successes = 0;
        let termination;
        let mut steps = 0;
        loop {
            if steps >= ctl.max_steps {
                termination = Termination::StepBudget;
                break;
            }
            let attempt = self.corrector(&x, &t, ds);
            let Some(c) = attempt else {
                ds *= 0.5;
                successes = 0;
                if ds < ctl.ds_min {
                    termination = Termination::CorrectorFailure;
                    break;
                }
                continue;
            };
            steps += 1;
            let t_new = self.tangent(&c, &t);
            let det_new = Self::det_sign(&c.lu);
            let fold = t_new[m].signum() != t[m].signum() && t[m] != 0.0 && t_new[m] != 0.0;
            let point = self.make_point(&c.x, &t_new, &c.jy);
            let idx = branch.points.len();
            if fold {
                let (eps, amp) = self.fold_vertex(&branch.points, &point);
                if (eps - eps_ref).abs() > self.eps_noise {
                    branch.events.push(Event::Fold {
                        epsilon: eps,
                        amplitude: amp,
                        index: idx,
                    });
                }
            } else if det_new != det {
                if let Some(ev) = self.locate_branch_point(&x, &t, ds, det, idx) {
                    branch.events.push(ev);
                }
            }
            det = det_new;
            x = c.x;
            t = t_new;
            let (eps, sup) = (point.epsilon, point.supnorm);
            branch.points.push(point);
            if sup > ctl.amplitude_cap {
                termination = Termination::AmplitudeCap;
                break;
            }
            if eps < ctl.epsilon_min || eps > ctl.epsilon_max {
                termination = Termination::EpsilonRange;
                break;
            }
            successes += 1;
            if successes >= 3 {
                ds = (ds * 1.3).min(ctl.ds_max);
                successes = 0;
            }
        }
        branch.terminations.push(termination);
        Ok(branch)
    }

    fn corrector(&self, x: &DVector<f64>, t: &DVector<f64>, ds: f64) -> Option<Corrected> {
        let guess = x + t * ds;
        let target = t.dot(x) + ds;
        let c = self.solve_constrained(guess, t, target)?;
        if (&c.x - x).norm() > 4.0 * ds {
            return None;
        }
        Some(c)
    }

    fn fold_vertex(&self, points: &[Point], new: &Point) -> (f64, f64) {
        let Some(a) = points.last() else {
            return (new.epsilon, new.amplitude);
        };
        let tw = self.v_crit.dot(&a.tangent_u);
        hermite_vertex((a.amplitude, a.epsilon), a.tangent_epsilon / tw, (new.amplitude, new.epsilon))
            .unwrap_or((new.epsilon, new.amplitude))
    }

    fn locate_branch_point(&self, x: &DVector<f64>, t: &DVector<f64>, ds: f64, det0: f64, idx: usize) -> Option<Event> {
        let (mut lo, mut hi) = (0.0, ds);
        let mut best = None;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let c = self.corrector(x, t, mid)?;
            if Self::det_sign(&c.lu) == det0 {
                lo = mid;
            } else {
                hi = mid;
            }
            best = Some(c.x);
            if hi - lo <= 1e-12 * ds.max(1e-300) {
                break;
            }
        }
        let xb = best?;
        let (y, eps) = self.split(&xb);
        Some(Event::BranchPoint {
            epsilon: eps,
            amplitude: self.v_reduced.dot(&y),
            index: idx,
            u: self.lift(&y).iter().copied().collect(),
        })
    }

    pub fn v_crit(&self) -> &DVector<f64> {
        &self.v_crit
    }

    pub fn params(&self) -> SHParams {
        self.params
    }
}

fn reindex(e: Event, f: impl Fn(usize) -> usize) -> Event {
    match e {
        Event::Fold {
            epsilon,
            amplitude,
            index,
        } => Event::Fold {
            epsilon,
            amplitude,
            index: f(index),
        },
        Event::BranchPoint {
            epsilon,
            amplitude,
            index,
            u,
        } => Event::BranchPoint {
            epsilon,
            amplitude,
            index: f(index),
            u,
        },
    }
}

/// Vertex `(ε, w)` of the parabola `ε(w)` through `a` with slope `slope` and through `b`.
fn hermite_vertex(a: (f64, f64), slope: f64, b: (f64, f64)) -> Option<(f64, f64)> {
    let h = b.0 - a.0;
    let c = (b.1 - a.1 - slope * h) / (h * h);
    if !c.is_finite() || c == 0.0 || !slope.is_finite() {
        return None;
    }
    let w = a.0 - slope / (2.0 * c);
    Some((a.1 + slope * (w - a.0) + c * (w - a.0).powi(2), w))
}

/// Vertex `(ε, w)` of the parabola `ε(w)` through three points `(w, ε)`.
fn parabola_vertex(p: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !a.is_finite() || a == 0.0 {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let w = -b / (2.0 * a);
    let eps = y0 + d01 * (w - x0) + a * (w - x0) * (w - x1);
    Some((eps, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    /// Points with `|w| ≤ window` enter the fit.
    pub window: f64,
    /// Points with `|ε - ε₀|` at or below this carry only round-off and are dropped.
    pub epsilon_floor: f64,
    /// The exponent uses points with `|ε - ε₀|` within this many decades above the floor.
    pub exponent_decades: f64,
}

impl FitOptions {
    /// Defaults for a graph of size `n` whose linear operator has norm `linear_norm`.
    pub fn for_size(n: usize, linear_norm: f64) -> Self {
        FitOptions {
            window: 0.1 * (n as f64).sqrt(),
            epsilon_floor: NOISE_FACTOR * f64::EPSILON * linear_norm,
            exponent_decades: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormFit {
    pub a2: f64,
    pub a3: f64,
    /// Root-mean-square misfit in `ε`.
    pub residual: f64,
    /// Slope of `log|w|` against `log|ε - ε₀|` next to the branch point.
    pub exponent: Option<f64>,
    pub points: usize,
    pub exponent_points: usize,
}

/// Least-squares fit of `ε - ε₀ = -a₂ w - a₃ w²` over `(w, ε)` samples.
pub fn fit_normal_form_samples(samples: &[(f64, f64)], eps0: f64, opts: &FitOptions) -> Result<NormalFormFit> {
    let used: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(w, e)| w.abs() <= opts.window && (e - eps0).abs() > opts.epsilon_floor)
        .collect();
    if used.len() < 8 {
        return Err(Error::InsufficientPoints {
            needed: 8,
            found: used.len(),
        });
    }
    let a = DMatrix::from_fn(used.len(), 2, |i, c| {
        let w = used[i].0;
        if c == 0 {
            -w
        } else {
            -w * w
        }
    });
    let rhs = DVector::from_iterator(used.len(), used.iter().map(|(_, e)| e - eps0));
    // column scaling keeps the least-squares problem well conditioned
    let scale = DVector::from_fn(2, |c, _| a.column(c).norm().max(f64::MIN_POSITIVE));
    let mut a_s = a.clone();
    for c in 0..2 {
        a_s.column_mut(c).unscale_mut(scale[c]);
    }
    let sol = a_s
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NoConvergence(e.into()))?;
    let (a2, a3) = (sol[0] / scale[0], sol[1] / scale[1]);
    let residual = ((a * DVector::from_vec(vec![a2, a3]) - &rhs).norm_squared() / used.len() as f64).sqrt();

    let top = opts.epsilon_floor * 10f64.powf(opts.exponent_decades);
    let logs: Vec<(f64, f64)> = used
        .iter()
        .filter(|(_, e)| (e - eps0).abs() <= top)
        .map(|(w, e)| ((e - eps0).abs().ln(), w.abs().ln()))
        .collect();
    let exponent = (logs.len() >= 4).then(|| {
        let k = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(NormalFormFit {
        a2,
        a3,
        residual,
        exponent,
        points: used.len(),
        exponent_points: logs.len(),
    })
}

pub fn fit_normal_form(branch: &Branch, eps0: f64, opts: &FitOptions) -> Result<NormalFormFit> {
    let samples: Vec<(f64, f64)> = branch.points.iter().map(|p| (p.amplitude, p.epsilon)).collect();
    fit_normal_form_samples(&samples, eps0, opts)
}
