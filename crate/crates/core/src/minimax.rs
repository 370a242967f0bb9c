//! Iterative reference-point minimax optimization.
//!
//! The engine minimizes `max_{(i,j) ∈ grid} F(i,j; params)` for a smooth
//! family `F` over a finite grid, without ever forming all grid gradients:
//! it keeps a small, growing set of *reference points*, solves the epigraph
//! nonlinear program
//!
//! ```text
//! min t   s.t.   F(ref_k; params) − t ≤ 0  for every reference point,
//!                (t_prev − δ) − t ≤ 0,
//! ```
//!
//! for the current reference set, re-evaluates the full grid maximum, and
//! adds its argmax as a new reference point when it is not yet tracked. The
//! proximal constraint caps the decrease of `t` per outer iteration at
//! `δ` (default 0.005), which keeps each subproblem a short, well-behaved
//! solve and the parameter path slowly varying.
//!
//! Convergence requires both of: the full-grid maximum exceeds the
//! reference-set maximum by at most `gap_tol·(1 + |t|)`, and `t` has stopped
//! improving (less than `stall_tol` over the trailing window of up to ten
//! iterations).

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nlp::{self, NlpProblem, NlpStatus, SolveOpts};

/// A smooth objective family over a fixed 2D index grid.
pub trait MinimaxFamily: Sync {
    /// Dimension of the parameter vector.
    fn param_dim(&self) -> usize;
    /// Grid shape `(rows, cols)` of the index set.
    fn grid_dims(&self) -> (usize, usize);
    /// Full-grid maximum of `F` and its argmax pair (ties to the lowest
    /// row, then the lowest column).
    fn grid_max(&self, params: &[f64]) -> (f64, (usize, usize));
    /// `F` at the given pairs.
    fn values(&self, params: &[f64], pairs: &[(usize, usize)]) -> Vec<f64>;
    /// `F` and its parameter Jacobian (`pairs.len() × param_dim`) at the
    /// given pairs.
    fn values_and_jacobian(
        &self,
        params: &[f64],
        pairs: &[(usize, usize)],
    ) -> (Vec<f64>, Array2<f64>);
}

/// A tracked grid pair together with the outer iteration that added it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub i: usize,
    pub j: usize,
    /// Outer-iteration counter at collection time.
    pub added_at: u64,
}

/// One outer iteration's summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: u64,
    /// Epigraph value after the iteration's solve.
    pub t: f64,
    pub ref_count: usize,
    /// Full-grid maximum under the post-step parameters.
    pub grid_max: f64,
}

/// The evolving optimization state.
///
/// Serialization covers the resumable core (`params`, `refs`, `t`,
/// `iteration`); the history is session-local diagnostics and is written
/// separately by callers that keep it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptState {
    pub params: Vec<f64>,
    pub refs: Vec<ReferencePoint>,
    /// Current epigraph value; an upper bound for every reference `F`.
    pub t: f64,
    pub iteration: u64,
    #[serde(skip)]
    pub history: Vec<HistoryEntry>,
}

impl OptState {
    /// Fresh state at the given parameters: no references, `t` set to the
    /// full-grid maximum (a feasible epigraph value).
    pub fn init<F: MinimaxFamily>(family: &F, params: Vec<f64>) -> Self {
        assert_eq!(params.len(), family.param_dim(), "parameter length mismatch");
        let (t, _) = family.grid_max(&params);
        Self { params, refs: Vec::new(), t, iteration: 0, history: Vec::new() }
    }

    pub fn ref_pairs(&self) -> Vec<(usize, usize)> {
        self.refs.iter().map(|r| (r.i, r.j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxOpts {
    /// Per-iteration cap on the decrease of `t`.
    pub delta_step: f64,
    /// Relative gap tolerance between grid max and reference max.
    pub gap_tol: f64,
    /// Minimum `t` improvement over the trailing window to keep going.
    pub stall_tol: f64,
    /// Outer-iteration budget per `optimize` call.
    pub max_outer: u64,
    /// Carryover keeps all references below this count…
    pub keep_threshold: usize,
    /// …otherwise only those added within this many trailing iterations.
    pub window: u64,
    /// Inner solver options.
    pub nlp: SolveOpts,
}

impl Default for MinimaxOpts {
    fn default() -> Self {
        Self {
            delta_step: 0.005,
            gap_tol: 1e-6,
            stall_tol: 1e-9,
            max_outer: 5000,
            keep_threshold: 200,
            window: 100,
            nlp: SolveOpts::default(),
        }
    }
}

/// Inner-solver breakdown, carrying the state at failure.
#[derive(Debug, Error)]
#[error("reference-point subproblem failed at outer iteration {} ({detail})", state.iteration)]
pub struct SolverFailure {
    pub state: OptState,
    pub detail: String,
}

/// Adds `pair` to the reference set unless already tracked; returns whether
/// it was added. New points are tagged with the current iteration counter.
pub fn collect_reference(state: &mut OptState, pair: (usize, usize)) -> bool {
    if state.refs.iter().any(|r| (r.i, r.j) == pair) {
        return false;
    }
    state.refs.push(ReferencePoint { i: pair.0, j: pair.1, added_at: state.iteration });
    true
}

/// The epigraph subproblem over the current reference set. Variables are
/// `z = (params, t)`.
struct StepProblem<'a, F: MinimaxFamily> {
    family: &'a F,
    pairs: Vec<(usize, usize)>,
    start: Vec<f64>,
    t_floor: f64,
}

impl<F: MinimaxFamily> NlpProblem for StepProblem<'_, F> {
    fn n(&self) -> usize {
        self.family.param_dim() + 1
    }
    fn m(&self) -> usize {
        self.pairs.len() + 1
    }
    fn start(&self) -> Vec<f64> {
        self.start.clone()
    }
    fn objective(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; z.len()];
        g[z.len() - 1] = 1.0;
        (z[z.len() - 1], g)
    }
    fn objective_value(&self, z: &[f64]) -> f64 {
        z[z.len() - 1]
    }
    fn constraints(&self, z: &[f64]) -> Vec<f64> {
        let np = z.len() - 1;
        let t = z[np];
        let mut vals = self.family.values(&z[..np], &self.pairs);
        for v in vals.iter_mut() {
            *v -= t;
        }
        vals.push(self.t_floor - t);
        vals
    }
    fn constraint_jacobian(&self, z: &[f64]) -> Array2<f64> {
        let np = z.len() - 1;
        let (_, jf) = self.family.values_and_jacobian(&z[..np], &self.pairs);
        let mut jac = Array2::<f64>::zeros((self.pairs.len() + 1, np + 1));
        for r in 0..self.pairs.len() {
            for c in 0..np {
                jac[(r, c)] = jf[(r, c)];
            }
            jac[(r, np)] = -1.0;
        }
        jac[(self.pairs.len(), np)] = -1.0;
        jac
    }
}

/// Runs one reference-point solve and advances the state.
///
/// On success `params` and `t` take the solver iterate, the iteration
/// counter increments, and a history entry records the new `t`, the
/// reference count, and a fresh full-grid maximum. The solve is accepted
/// for any status whose iterate is usable (a feasible `t` is a valid
/// epigraph bound even short of full KKT convergence); it is rejected —
/// leaving the state untouched — when the solver broke down without
/// reaching feasibility.
///
/// The solve starts from the incoming parameters with `t` lifted, when
/// necessary, to the largest reference value — a freshly exchanged
/// reference usually sits above the previous level, and seeding the solver
/// inside the feasible region guarantees (by its feasibility-first result
/// ranking) an iterate no worse than the lifted start. The proximal floor
/// is measured from that effective start, so a post-exchange recovery
/// descends at the same pace as ordinary iterations.
pub fn step<F: MinimaxFamily>(
    state: &mut OptState,
    family: &F,
    opts: &MinimaxOpts,
) -> Result<(), String> {
    let pairs = state.ref_pairs();
    let ref_max = family
        .values(&state.params, &pairs)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    // The threshold matches the inner solver's feasibility tolerance: a
    // violation it would tolerate is not worth lifting over.
    let t_start = if ref_max > state.t + 1e-8 { ref_max } else { state.t };
    let problem = StepProblem {
        family,
        pairs,
        start: {
            let mut s = state.params.clone();
            s.push(t_start);
            s
        },
        t_floor: t_start - opts.delta_step,
    };
    let res = nlp::solve(&problem, &opts.nlp).map_err(|e| e.to_string())?;
    if !res.z.iter().all(|v| v.is_finite()) {
        return Err("solver produced a non-finite iterate".into());
    }
    if res.status == NlpStatus::LineSearchFailure && res.max_violation > 1e-6 {
        return Err(format!(
            "line search stalled at violation {:.3e}",
            res.max_violation
        ));
    }
    let np = family.param_dim();
    state.params = res.z[..np].to_vec();
    state.t = res.z[np];
    state.iteration += 1;
    let (gmax, _) = family.grid_max(&state.params);
    state.history.push(HistoryEntry {
        iteration: state.iteration,
        t: state.t,
        ref_count: state.refs.len(),
        grid_max: gmax,
    });
    Ok(())
}

fn stalled(history: &[HistoryEntry], stall_tol: f64) -> bool {
    if history.len() < 2 {
        return false;
    }
    let w = history.len() - 1;
    let w = w.min(10);
    let last = history[history.len() - 1].t;
    let past = history[history.len() - 1 - w].t;
    // Net movement, either way: a level still descending has not stalled,
    // and neither has one climbing through a post-exchange correction.
    (past - last).abs() < stall_tol
}

/// Runs the outer loop to convergence or the iteration budget.
///
/// Returns the final state and whether the convergence test (gap closed
/// *and* `t` stalled) was met. Inner-solver breakdown surfaces as
/// [`SolverFailure`] carrying the state at that point.
pub fn optimize<F: MinimaxFamily>(
    mut state: OptState,
    family: &F,
    opts: &MinimaxOpts,
) -> Result<(OptState, bool), SolverFailure> {
    let mut local: u64 = 0;
    loop {
        let (gmax, arg) = family.grid_max(&state.params);
        if !state.refs.is_empty() {
            let ref_vals = family.values(&state.params, &state.ref_pairs());
            let ref_max = ref_vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let gap = gmax - ref_max;
            if gap <= opts.gap_tol * (1.0 + state.t.abs()) && stalled(&state.history, opts.stall_tol)
            {
                return Ok((state, true));
            }
        }
        if local >= opts.max_outer {
            return Ok((state, false));
        }
        collect_reference(&mut state, arg);
        if let Err(detail) = step(&mut state, family, opts) {
            return Err(SolverFailure { state, detail });
        }
        local += 1;
    }
}

/// Rebases a finished state onto a new (neighboring) objective family.
///
/// Parameters carry over verbatim. The reference set carries over whole
/// while it is small (fewer than `keep_threshold` points); a larger set is
/// thinned to the points added within the trailing `window` iterations.
/// Kept references are re-tagged as inherited (`added_at = 0`), the
/// iteration counter and history reset, and `t` restarts at the grid
/// maximum of the carried parameters under the new family.
pub fn carryover<F: MinimaxFamily>(state: &OptState, family: &F, opts: &MinimaxOpts) -> OptState {
    let kept: Vec<ReferencePoint> = if state.refs.len() < opts.keep_threshold {
        state.refs.iter().map(|r| ReferencePoint { added_at: 0, ..*r }).collect()
    } else {
        state
            .refs
            .iter()
            .filter(|r| r.added_at + opts.window > state.iteration)
            .map(|r| ReferencePoint { added_at: 0, ..*r })
            .collect()
    };
    let (t, _) = family.grid_max(&state.params);
    OptState {
        params: state.params.clone(),
        refs: kept,
        t,
        iteration: 0,
        history: Vec::new(),
    }
}
