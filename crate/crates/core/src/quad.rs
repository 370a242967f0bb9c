//! Uniform grids on `[−τ, 0]` with composite Simpson 1/3 weights, 1D/2D
//! integration, and kernel sampling.
//!
//! The transfer kernel has a value discontinuity along the line
//! `θ + τ + s = 0`, which for equal uniform grids passes exactly through the
//! node pairs `(θ_i, s_{m−1−i})`. Sampling a discontinuous integrand at its
//! jump with a one-sided value costs Simpson an order of accuracy (O(h)
//! systematic bias), so besides plain pointwise sampling this module offers
//! jump-aware samplers that replace the value at aligned nodes by the
//! arithmetic or quadratic mean of the two one-sided limits, restoring the
//! ~O(h²) error of a kinked-but-continuous integrand.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::parallel::par_map_indexed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("grid size must be odd and at least 3, got {0}")]
    BadGridSize(usize),
    #[error("value count {got} does not match grid size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("sample matrix is {rows}x{cols}, grids are {m_theta}x{m_s}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        m_theta: usize,
        m_s: usize,
    },
}

/// Uniform grid on `[−τ, 0]` with composite Simpson 1/3 weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    tau: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadGrid {
    /// Builds the `m`-node uniform grid on `[−tau, 0]`.
    ///
    /// `m` must be odd and ≥ 3 (Simpson 1/3 needs an even interval count).
    pub fn new(tau: f64, m: usize) -> Result<Self, QuadError> {
        if m < 3 || m % 2 == 0 {
            return Err(QuadError::BadGridSize(m));
        }
        assert!(tau > 0.0, "grid length must be positive, got {tau}");
        let denom = (m - 1) as f64;
        // Written so both endpoints are exact (no accumulated rounding past 0).
        let nodes: Vec<f64> = (0..m)
            .map(|i| -tau * ((m - 1 - i) as f64) / denom)
            .collect();
        let h = tau / denom;
        let mut weights = vec![0.0; m];
        for (i, w) in weights.iter_mut().enumerate() {
            *w = if i == 0 || i == m - 1 {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
        Ok(Self { tau, nodes, weights })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// Scalars that can be accumulated against real weights.
pub trait Weighted: Copy + Send + Sync {
    fn zero() -> Self;
    fn weighted_acc(self, w: f64, acc: Self) -> Self;
}

impl Weighted for f64 {
    fn zero() -> Self {
        0.0
    }
    fn weighted_acc(self, w: f64, acc: Self) -> Self {
        acc + self * w
    }
}

impl Weighted for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn weighted_acc(self, w: f64, acc: Self) -> Self {
        acc + self * w
    }
}

/// Simpson integral of grid samples: the weighted dot product. Sequential
/// accumulation in index order, so results are build-independent.
pub fn integrate_1d<T: Weighted>(values: &[T], grid: &QuadGrid) -> Result<T, QuadError> {
    if values.len() != grid.len() {
        return Err(QuadError::LengthMismatch {
            got: values.len(),
            expected: grid.len(),
        });
    }
    let mut acc = T::zero();
    for (v, w) in values.iter().zip(grid.weights()) {
        acc = v.weighted_acc(*w, acc);
    }
    Ok(acc)
}

/// Tensor-product Simpson integral `wᵀ · S · w'` of a sample matrix.
pub fn integrate_2d<T: Weighted>(
    samples: &Array2<T>,
    grid_theta: &QuadGrid,
    grid_s: &QuadGrid,
) -> Result<T, QuadError> {
    let (rows, cols) = samples.dim();
    if rows != grid_theta.len() || cols != grid_s.len() {
        return Err(QuadError::DimensionMismatch {
            rows,
            cols,
            m_theta: grid_theta.len(),
            m_s: grid_s.len(),
        });
    }
    let mut acc = T::zero();
    for i in 0..rows {
        let mut row_acc = T::zero();
        for j in 0..cols {
            row_acc = samples[(i, j)].weighted_acc(grid_s.weight(j), row_acc);
        }
        acc = row_acc.weighted_acc(grid_theta.weight(i), acc);
    }
    Ok(acc)
}

/// Samples a pointwise-defined kernel on the grid product: entry
/// `(i, j) = k(θ_i, s_j)`. Evaluation is data-parallel by rows.
pub fn sample_kernel<T, F>(k: F, grid_theta: &QuadGrid, grid_s: &QuadGrid) -> Array2<T>
where
    T: Weighted,
    F: Fn(f64, f64) -> T + Sync + Send,
{
    let (mt, ms) = (grid_theta.len(), grid_s.len());
    let rows = par_map_indexed(mt, |i| {
        let theta = grid_theta.node(i);
        (0..ms).map(|j| k(theta, grid_s.node(j))).collect::<Vec<T>>()
    });
    let mut out = Array2::from_elem((mt, ms), T::zero());
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// A kernel with a single value discontinuity along `θ + τ + s = 0`.
///
/// `eval` uses the closed-indicator convention (the jump term is included on
/// the line itself); `eval_outside` evaluates with that indicator off,
/// giving the one-sided limit from the other side of the line.
pub trait JumpKernel: Sync {
    fn tau(&self) -> f64;
    fn eval(&self, theta: f64, s: f64) -> Complex64;
    fn eval_outside(&self, theta: f64, s: f64) -> Complex64;
}

fn on_jump_line(kernel_tau: f64, theta: f64, s: f64) -> bool {
    (theta + kernel_tau + s).abs() <= 1e-12 * kernel_tau.max(1.0)
}

/// How to sample a [`JumpKernel`] at nodes lying exactly on its jump line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpRule {
    /// Take the closed-convention value as is (pointwise sampling).
    Closed,
    /// Arithmetic mean of the two one-sided moduli; the right convention
    /// when the sampled matrix feeds an operator estimate (Nyström, Schur
    /// ratios), which is linear in the sample values.
    MeanAbs,
    /// Quadratic mean `sqrt((a² + b²)/2)` of the one-sided moduli; the right
    /// convention when the samples are squared afterwards (L2 norms).
    RootMeanSquareAbs,
}

/// Samples `|k|` on the grid product under the given jump rule.
pub fn sample_abs<K: JumpKernel>(
    k: &K,
    grid_theta: &QuadGrid,
    grid_s: &QuadGrid,
    rule: JumpRule,
) -> Array2<f64> {
    let (mt, ms) = (grid_theta.len(), grid_s.len());
    let tau = k.tau();
    let rows = par_map_indexed(mt, |i| {
        let theta = grid_theta.node(i);
        (0..ms)
            .map(|j| {
                let s = grid_s.node(j);
                let inside = k.eval(theta, s).norm();
                if rule == JumpRule::Closed || !on_jump_line(tau, theta, s) {
                    inside
                } else {
                    let outside = k.eval_outside(theta, s).norm();
                    match rule {
                        JumpRule::MeanAbs => 0.5 * (inside + outside),
                        JumpRule::RootMeanSquareAbs => {
                            (0.5 * (inside * inside + outside * outside)).sqrt()
                        }
                        JumpRule::Closed => unreachable!(),
                    }
                }
            })
            .collect::<Vec<f64>>()
    });
    let mut out = Array2::zeros((mt, ms));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Samples the complex kernel pointwise under the closed convention.
pub fn sample_complex<K: JumpKernel>(
    k: &K,
    grid_theta: &QuadGrid,
    grid_s: &QuadGrid,
) -> Array2<Complex64> {
    sample_kernel(|theta, s| k.eval(theta, s), grid_theta, grid_s)
}
