//! The positive test-function pair (𝔭, 𝔮) parameterized by a small neural
//! network, and the Schur ratio fields it induces against a sampled kernel
//! modulus.
//!
//! The network has shape (1, 30, 2) with activation `σ(y) = 1/(1 + y²)`:
//!
//! ```text
//! h_i = σ(m1_i·x + b1_i),      N_r = Σ_i m2[r,i]·h_i + b2_r   (r = 1, 2),
//! 𝔭(x) = N₁(x)² + 0.01,        𝔮(x) = N₂(x)² + 0.01,
//! ```
//!
//! so both test functions are bounded below by 0.01 for any parameter
//! vector. Against a nonnegative kernel sample matrix `|K|(θ_i, s_j)` with
//! quadrature weights `w, w′` the Schur ratio fields are
//!
//! ```text
//! rx_i = Σ_j w′_j·|K|(θ_i, s_j)·𝔮(s_j) / 𝔭(θ_i),
//! ry_j = Σ_i w_i·|K|(θ_i, s_j)·𝔭(θ_i) / 𝔮(s_j),
//! ```
//!
//! and `√(max_i rx_i · max_j ry_j)` is the Schur bound for the sampled
//! operator. The pair objective `F(i,j) = rx_i·ry_j` is what the minimax
//! engine drives down; its gradient with respect to the 122 network
//! parameters is assembled here analytically.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::par_map_indexed;
use crate::quad::QuadGrid;

/// Hidden-layer width.
pub const N_HIDDEN: usize = 30;
/// Total flat parameter count: 30 + 30 + 2·30 + 2.
pub const N_PARAMS: usize = 4 * N_HIDDEN + 2;

/// Floor added to both squared network outputs.
pub const PQ_FLOOR: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("flat parameter vector has length {got}, expected {N_PARAMS}")]
    BadLength { got: usize },
    #[error("pair index ({i}, {j}) outside the {m_theta}×{m_s} grid")]
    IndexOutOfRange { i: usize, j: usize, m_theta: usize, m_s: usize },
}

/// The (1, 30, 2) network in flat parameter order `(m1, b1, m2 row-major, b2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurModel {
    params: Vec<f64>,
}

fn sigma(y: f64) -> f64 {
    1.0 / (1.0 + y * y)
}

fn sigma_prime(y: f64) -> f64 {
    let d = 1.0 + y * y;
    -2.0 * y / (d * d)
}

impl SchurModel {
    pub fn from_flat(params: Vec<f64>) -> Result<Self, ModelError> {
        if params.len() != N_PARAMS {
            return Err(ModelError::BadLength { got: params.len() });
        }
        Ok(Self { params })
    }

    /// All parameters zero; 𝔭 ≡ 𝔮 ≡ 0.01.
    pub fn zeros() -> Self {
        Self { params: vec![0.0; N_PARAMS] }
    }

    /// Deterministic uniform `[−1, 1)` initialization from a 64-bit seed.
    ///
    /// Uses ChaCha8 with the 53-bit mantissa mapping `(u >> 11)·2⁻⁵³`, so the
    /// draw is reproducible across platforms and independent of any global
    /// RNG state.
    pub fn random_init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..N_PARAMS)
            .map(|_| {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                2.0 * u - 1.0
            })
            .collect();
        Self { params }
    }

    pub fn flat(&self) -> &[f64] {
        &self.params
    }

    fn m1(&self) -> &[f64] {
        &self.params[0..N_HIDDEN]
    }
    fn b1(&self) -> &[f64] {
        &self.params[N_HIDDEN..2 * N_HIDDEN]
    }
    /// Row r of the output weight matrix (r ∈ {0, 1}).
    fn m2(&self, r: usize) -> &[f64] {
        let base = 2 * N_HIDDEN + r * N_HIDDEN;
        &self.params[base..base + N_HIDDEN]
    }
    fn b2(&self, r: usize) -> f64 {
        self.params[4 * N_HIDDEN + r]
    }

    /// Raw network outputs `(N₁(x), N₂(x))`.
    pub fn eval_n(&self, x: f64) -> (f64, f64) {
        let m1 = self.m1();
        let b1 = self.b1();
        let m2a = self.m2(0);
        let m2b = self.m2(1);
        let mut n1 = self.b2(0);
        let mut n2 = self.b2(1);
        for i in 0..N_HIDDEN {
            let h = sigma(m1[i] * x + b1[i]);
            n1 += m2a[i] * h;
            n2 += m2b[i] * h;
        }
        (n1, n2)
    }

    /// `(𝔭(x), 𝔮(x))` at a single point.
    pub fn eval_pq_point(&self, x: f64) -> (f64, f64) {
        let (n1, n2) = self.eval_n(x);
        (n1 * n1 + PQ_FLOOR, n2 * n2 + PQ_FLOOR)
    }

    /// 𝔭 over the θ-grid and 𝔮 over the s-grid.
    pub fn eval_pq(&self, grid_theta: &QuadGrid, grid_s: &QuadGrid) -> (Vec<f64>, Vec<f64>) {
        let p = grid_theta.nodes().iter().map(|&x| self.eval_pq_point(x).0).collect();
        let q = grid_s.nodes().iter().map(|&x| self.eval_pq_point(x).1).collect();
        (p, q)
    }

    /// 𝔭, 𝔮 together with their dense Jacobians (`m×122` each) with respect
    /// to the flat parameter vector.
    ///
    /// Row `i` of `dp` is `∂𝔭(θ_i)/∂params`; columns follow the flat order.
    /// Entries for parameters that cannot influence the output (the other
    /// network head's `m2`/`b2` block) are exactly zero.
    pub fn eval_pq_jac(
        &self,
        grid_theta: &QuadGrid,
        grid_s: &QuadGrid,
    ) -> (Vec<f64>, Vec<f64>, Array2<f64>, Array2<f64>) {
        let (p, dp) = self.head_jac(grid_theta.nodes(), 0);
        let (q, dq) = self.head_jac(grid_s.nodes(), 1);
        (p, q, dp, dq)
    }

    /// One head's values and Jacobian over a node list.
    fn head_jac(&self, nodes: &[f64], r: usize) -> (Vec<f64>, Array2<f64>) {
        let m = nodes.len();
        let rows: Vec<(f64, Vec<f64>)> = par_map_indexed(m, |i| {
            let x = nodes[i];
            let m1 = self.m1();
            let b1 = self.b1();
            let m2r = self.m2(r);
            let mut row = vec![0.0; N_PARAMS];
            let mut n = self.b2(r);
            for k in 0..N_HIDDEN {
                let y = m1[k] * x + b1[k];
                let h = sigma(y);
                let hp = sigma_prime(y);
                n += m2r[k] * h;
                // ∂N/∂m1_k, ∂N/∂b1_k, ∂N/∂m2[r,k]
                row[k] = m2r[k] * hp * x;
                row[N_HIDDEN + k] = m2r[k] * hp;
                row[2 * N_HIDDEN + r * N_HIDDEN + k] = h;
            }
            row[4 * N_HIDDEN + r] = 1.0;
            // value = N² + floor; chain the factor 2N into every column.
            let scale = 2.0 * n;
            for c in row.iter_mut() {
                *c *= scale;
            }
            (n * n + PQ_FLOOR, row)
        });
        let mut values = Vec::with_capacity(m);
        let mut jac = Array2::zeros((m, N_PARAMS));
        for (i, (v, row)) in rows.into_iter().enumerate() {
            values.push(v);
            for (k, x) in row.into_iter().enumerate() {
                jac[(i, k)] = x;
            }
        }
        (values, jac)
    }
}

/// The Schur ratio fields of a model against a sampled kernel modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurField {
    /// 𝔭 over the θ-grid.
    pub p: Vec<f64>,
    /// 𝔮 over the s-grid.
    pub q: Vec<f64>,
    /// Row ratios `rx_i`.
    pub rx: Vec<f64>,
    /// Column ratios `ry_j`.
    pub ry: Vec<f64>,
}

/// Builds the ratio fields from explicit test-function samples.
///
/// `kabs` must be the `m_θ × m_s` nonnegative sample matrix; `p`, `q` must
/// be strictly positive samples on the two grids.
pub fn ratios_from_pq(
    kabs: &Array2<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    grid_theta: &QuadGrid,
    grid_s: &QuadGrid,
) -> Result<SchurField, ModelError> {
    let (mt, ms) = kabs.dim();
    if p.len() != mt || q.len() != ms || grid_theta.len() != mt || grid_s.len() != ms {
        return Err(ModelError::IndexOutOfRange { i: p.len(), j: q.len(), m_theta: mt, m_s: ms });
    }
    let ws = grid_s.weights();
    let wt = grid_theta.weights();
    let rx: Vec<f64> = par_map_indexed(mt, |i| {
        let mut acc = 0.0;
        let row = kabs.row(i);
        for j in 0..ms {
            acc += ws[j] * row[j] * q[j];
        }
        acc / p[i]
    });
    let ry: Vec<f64> = par_map_indexed(ms, |j| {
        let mut acc = 0.0;
        for i in 0..mt {
            acc += wt[i] * kabs[(i, j)] * p[i];
        }
        acc / q[j]
    });
    Ok(SchurField { p, q, rx, ry })
}

/// Ratio fields of a model: evaluates (𝔭, 𝔮) and delegates to
/// [`ratios_from_pq`].
pub fn ratios(
    kabs: &Array2<f64>,
    model: &SchurModel,
    grid_theta: &QuadGrid,
    grid_s: &QuadGrid,
) -> Result<SchurField, ModelError> {
    let (p, q) = model.eval_pq(grid_theta, grid_s);
    ratios_from_pq(kabs, p, q, grid_theta, grid_s)
}

/// `F(i, j) = rx_i · ry_j` for one grid pair.
pub fn pair_value(field: &SchurField, i: usize, j: usize) -> Result<f64, ModelError> {
    if i >= field.rx.len() || j >= field.ry.len() {
        return Err(ModelError::IndexOutOfRange {
            i,
            j,
            m_theta: field.rx.len(),
            m_s: field.ry.len(),
        });
    }
    Ok(field.rx[i] * field.ry[j])
}

/// Index of the maximum entry, ties resolved to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Grid maximum of `F` and its argmax pair.
///
/// `F(i,j) = rx_i·ry_j` is separable with nonnegative factors, so the argmax
/// is `(argmax rx, argmax ry)`; ties resolve to the lowest `i`, then lowest
/// `j`.
pub fn grid_max(field: &SchurField) -> (f64, (usize, usize)) {
    let i = argmax(&field.rx);
    let j = argmax(&field.ry);
    (field.rx[i] * field.ry[j], (i, j))
}

/// `√(max rx · max ry)`: the Schur bound induced by the field.
pub fn schur_estimate(field: &SchurField) -> f64 {
    grid_max(field).0.sqrt()
}

/// Values of `F` at the requested pairs under the given model.
pub fn pair_values(
    kabs: &Array2<f64>,
    model: &SchurModel,
    grid_theta: &QuadGrid,
    grid_s: &QuadGrid,
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>, ModelError> {
    let field = ratios(kabs, model, grid_theta, grid_s)?;
    pairs.iter().map(|&(i, j)| pair_value(&field, i, j)).collect()
}

/// Values and parameter gradients of `F` at the requested pairs.
///
/// Returns `(values, jac)` where row `k` of `jac` is `∂F(i_k, j_k)/∂params`.
/// The assembly shares the two dense `m×122` chain products across all
/// pairs:
///
/// ```text
/// ∂rx_i = ([A·Dq]_i − rx_i·Dp_i) / 𝔭_i,   A_ij = w′_j·|K|_ij,
/// ∂ry_j = ([Bᵀ·Dp]_j − ry_j·Dq_j) / 𝔮_j,  B_ij = w_i·|K|_ij,
/// ∂F(i,j) = ry_j·∂rx_i + rx_i·∂ry_j.
/// ```
pub fn objective_grad(
    kabs: &Array2<f64>,
    model: &SchurModel,
    grid_theta: &QuadGrid,
    grid_s: &QuadGrid,
    pairs: &[(usize, usize)],
) -> Result<(Vec<f64>, Array2<f64>), ModelError> {
    let (mt, ms) = kabs.dim();
    for &(i, j) in pairs {
        if i >= mt || j >= ms {
            return Err(ModelError::IndexOutOfRange { i, j, m_theta: mt, m_s: ms });
        }
    }
    let (p, q, dp, dq) = model.eval_pq_jac(grid_theta, grid_s);
    let field = ratios_from_pq(kabs, p, q, grid_theta, grid_s)?;
    let wt = grid_theta.weights();
    let ws = grid_s.weights();

    // drx[i][k] = (Σ_j w′_j·kabs_ij·Dq_jk − rx_i·Dp_ik) / p_i
    let drx: Vec<Vec<f64>> = par_map_indexed(mt, |i| {
        let mut acc = vec![0.0; N_PARAMS];
        let row = kabs.row(i);
        for j in 0..ms {
            let c = ws[j] * row[j];
            if c != 0.0 {
                let dqr = dq.row(j);
                for k in 0..N_PARAMS {
                    acc[k] += c * dqr[k];
                }
            }
        }
        let dpr = dp.row(i);
        let (rxi, pi) = (field.rx[i], field.p[i]);
        for k in 0..N_PARAMS {
            acc[k] = (acc[k] - rxi * dpr[k]) / pi;
        }
        acc
    });
    let dry: Vec<Vec<f64>> = par_map_indexed(ms, |j| {
        let mut acc = vec![0.0; N_PARAMS];
        for i in 0..mt {
            let c = wt[i] * kabs[(i, j)];
            if c != 0.0 {
                let dpr = dp.row(i);
                for k in 0..N_PARAMS {
                    acc[k] += c * dpr[k];
                }
            }
        }
        let dqr = dq.row(j);
        let (ryj, qj) = (field.ry[j], field.q[j]);
        for k in 0..N_PARAMS {
            acc[k] = (acc[k] - ryj * dqr[k]) / qj;
        }
        acc
    });

    let mut values = Vec::with_capacity(pairs.len());
    let mut jac = Array2::zeros((pairs.len(), N_PARAMS));
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let (rxi, ryj) = (field.rx[i], field.ry[j]);
        values.push(rxi * ryj);
        for k in 0..N_PARAMS {
            jac[(r, k)] = ryj * drx[i][k] + rxi * dry[j][k];
        }
    }
    Ok((values, jac))
}

/// The Schur pair objective as a minimax family over the sample grid.
///
/// Parameters are the flat network vector; `F(i,j) = rx_i·ry_j`, so the
/// minimax value is the squared Schur bound for the sampled operator.
pub struct SchurFamily<'a> {
    kabs: &'a Array2<f64>,
    grid_theta: &'a QuadGrid,
    grid_s: &'a QuadGrid,
}

impl<'a> SchurFamily<'a> {
    pub fn new(
        kabs: &'a Array2<f64>,
        grid_theta: &'a QuadGrid,
        grid_s: &'a QuadGrid,
    ) -> Result<Self, ModelError> {
        let (mt, ms) = kabs.dim();
        if grid_theta.len() != mt || grid_s.len() != ms {
            return Err(ModelError::IndexOutOfRange {
                i: grid_theta.len(),
                j: grid_s.len(),
                m_theta: mt,
                m_s: ms,
            });
        }
        Ok(Self { kabs, grid_theta, grid_s })
    }

    fn model(params: &[f64]) -> SchurModel {
        SchurModel::from_flat(params.to_vec()).expect("engine supplies 122-long parameters")
    }

    /// Ratio fields under a flat parameter vector.
    pub fn field(&self, params: &[f64]) -> SchurField {
        ratios(self.kabs, &Self::model(params), self.grid_theta, self.grid_s)
            .expect("dimensions validated at construction")
    }
}

impl crate::minimax::MinimaxFamily for SchurFamily<'_> {
    fn param_dim(&self) -> usize {
        N_PARAMS
    }
    fn grid_dims(&self) -> (usize, usize) {
        self.kabs.dim()
    }
    fn grid_max(&self, params: &[f64]) -> (f64, (usize, usize)) {
        grid_max(&self.field(params))
    }
    fn values(&self, params: &[f64], pairs: &[(usize, usize)]) -> Vec<f64> {
        let field = self.field(params);
        pairs
            .iter()
            .map(|&(i, j)| pair_value(&field, i, j).expect("pairs lie on the grid"))
            .collect()
    }
    fn values_and_jacobian(
        &self,
        params: &[f64],
        pairs: &[(usize, usize)],
    ) -> (Vec<f64>, Array2<f64>) {
        objective_grad(self.kabs, &Self::model(params), self.grid_theta, self.grid_s, pairs)
            .expect("pairs lie on the grid")
    }
}
