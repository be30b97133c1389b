//! Deterministic and random graphs sampled from a graphon on the grid `x_j = j/N`.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{evaluate, GraphonModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Deterministic,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphRealization {
    pub n: usize,
    pub adjacency: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub provenance: Provenance,
}

impl GraphRealization {
    pub fn grid(&self) -> Vec<f64> {
        grid(self.n)
    }
}

/// Grid points `x_j = j/N`, `j = 1..=N`; array index `i` holds `x_{i+1}`.
pub fn grid(n: usize) -> Vec<f64> {
    (1..=n).map(|j| j as f64 / n as f64).collect()
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("graph needs N >= 2, got {n}")));
    }
    Ok(())
}

/// Weighted graph with `A_ij = W(x_i, x_j)` off the diagonal.
pub fn deterministic_graph(model: &GraphonModel, n: usize) -> Result<GraphRealization> {
    check_n(n)?;
    model.validate()?;
    let x = grid(n);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = evaluate(model, x[i], x[j]);
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
    }
    let laplacian = laplacian(&a)?;
    Ok(GraphRealization {
        n,
        adjacency: a,
        laplacian,
        provenance: Provenance::Deterministic,
    })
}

/// Counter-based stream for row `i`: one 64-bit word per column `j > i`,
/// so each edge draw depends only on `(seed, i, j)`.
fn row_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng.set_word_pos(2 * (i as u128 + 1));
    rng
}

fn unit_uniform(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli graph with `P(ξ_ij = 1) = W(x_i, x_j)`.
pub fn random_graph(model: &GraphonModel, n: usize, seed: u64) -> Result<GraphRealization> {
    check_n(n)?;
    model.validate()?;
    let x = grid(n);
    let mut a = DMatrix::zeros(n, n);
    let mut deg = vec![0u64; n];
    for i in 0..n {
        let mut rng = row_rng(seed, i);
        for j in (i + 1)..n {
            let p = evaluate(model, x[i], x[j]);
            if unit_uniform(rng.next_u64()) < p {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
                deg[i] += 1;
                deg[j] += 1;
            }
        }
    }
    let mut l = a.clone();
    for (i, d) in deg.iter().enumerate() {
        l[(i, i)] = -(*d as f64);
    }
    Ok(GraphRealization {
        n,
        adjacency: a,
        laplacian: l,
        provenance: Provenance::Random { seed },
    })
}

/// Combinatorial Laplacian `A - diag(A·1)`.
pub fn laplacian(adjacency: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: adjacency.ncols(),
        });
    }
    for i in 0..n {
        if adjacency[(i, i)] != 0.0 {
            return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
        }
        for j in (i + 1)..n {
            let (u, v) = (adjacency[(i, j)], adjacency[(j, i)]);
            if (u - v).abs() > 1e-12 * u.abs().max(v.abs()).max(1.0) {
                return Err(Error::InvalidInput(format!("asymmetric entry ({i}, {j})")));
            }
        }
    }
    let mut l = adjacency.clone();
    for i in 0..n {
        let s: f64 = adjacency.row(i).iter().sum();
        l[(i, i)] = -s;
    }
    Ok(l)
}

/// Piecewise-constant graphon with value `R(|i-j|/N)` on block `I_i × I_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGraphon {
    pub n: usize,
    pub blocks: DMatrix<f64>,
}

pub fn step_graphon(model: &GraphonModel, n: usize) -> Result<StepGraphon> {
    if !model.is_ring() {
        return Err(Error::NotRing);
    }
    check_n(n)?;
    let x = grid(n);
    let blocks = DMatrix::from_fn(n, n, |i, j| evaluate(model, x[i], x[j]));
    Ok(StepGraphon { n, blocks })
}

impl StepGraphon {
    /// Block degree `(1/N) Σ_j W_ij`, diagonal block included.
    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.blocks.row(i).sum() / self.n as f64)
    }

    /// Matrix of the graphon Laplacian on functions constant on the cells of a
    /// grid with `refine` points per block (exact quadrature for step kernels).
    pub fn refined_laplacian(&self, refine: usize) -> DMatrix<f64> {
        let m = self.n * refine;
        let h = 1.0 / m as f64;
        let mut l = DMatrix::from_fn(m, m, |a, b| h * self.blocks[(a / refine, b / refine)]);
        for a in 0..m {
            let s: f64 = l.row(a).sum();
            l[(a, a)] -= s;
        }
        l
    }
}
