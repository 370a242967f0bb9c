//! Refined upper bounds for integral-operator norms via optimized Schur tests.
//!
//! The library bounds the operator norm of an integral operator `T_K` on
//! `L²[−τ, 0]` whose kernel `K(θ, s)` is the transfer kernel of a twofold
//! additive compound delay operator. The bound comes from the Schur test
//!
//! ```text
//! ‖T_K‖ ≤ sqrt(κx · κy),
//! κx = sup_θ (1/𝔭(θ)) ∫ |K|(θ, s) 𝔮(s) ds,
//! κy = sup_s (1/𝔮(s)) ∫ |K|(θ, s) 𝔭(θ) dθ,
//! ```
//!
//! where the positive test functions `(𝔭, 𝔮)` are parametrized by a small
//! neural network and optimized by an iterative reference-point
//! nonlinear-programming scheme ([`minimax`]). Baseline norms (kernel L2
//! norms, Nyström estimates, Galerkin truncation norms in the trigonometric
//! basis) bracket the result ([`norms`]).
//!
//! Module map:
//! - [`kernel`] — the 2×2 matrix exponential, the transfer kernel `K`, and
//!   its asymptotic kernel `K̄`;
//! - [`quad`] — uniform grids with composite Simpson 1/3 weights and kernel
//!   sampling (including jump-aware sampling along the kernel's
//!   discontinuity line);
//! - [`model`] — the (1, 30, 2) network for `(𝔭, 𝔮)`, Schur ratio fields,
//!   and analytic gradients;
//! - [`nlp`] — a dense SQP solver for smooth inequality-constrained
//!   problems;
//! - [`minimax`] — the reference-point exchange loop with proximal step
//!   bound and warm-start carryover;
//! - [`norms`] — L2 / Nyström / truncation baselines and the closed-form
//!   asymptotic L2 norm;
//! - [`parallel`] — order-preserving data-parallel maps (rayon behind the
//!   `parallel` feature, sequential otherwise).
//!
//! All floating-point results are deterministic for a fixed build: parallel
//! evaluation is restricted to independent per-index maps, and every
//! reduction runs sequentially in index order.

pub mod kernel;
pub mod minimax;
pub mod model;
pub mod nlp;
pub mod norms;
pub mod parallel;
pub mod quad;

pub use kernel::{Complex2x2, KernelParams, KernelError, MackeyGlassParams};
pub use minimax::{MinimaxFamily, MinimaxOpts, OptState, ReferencePoint};
pub use model::{SchurField, SchurModel};
pub use nlp::{NlpProblem, NlpStatus, SolveOpts};
pub use quad::QuadGrid;
