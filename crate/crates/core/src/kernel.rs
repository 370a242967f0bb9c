//! The transfer-operator kernel of a twofold additive compound delay
//! operator, together with its asymptotic kernel.
//!
//! Everything is built from the 2×2 matrix
//!
//! ```text
//! D₀ = [ −a            b   ]        p = −ν₀ + iω,
//!      [ −b·e^{−pτ}    a−p ]
//! ```
//!
//! whose exponential `e^{D₀t}` has the closed form
//! `e^{αt}[(cosh(δt) − α·sinh(δt)/δ)I + (sinh(δt)/δ)D₀]` with
//! `α = tr D₀ / 2` and `δ² = −det(D₀ − αI)`. The kernel on `[−τ, 0]²` is
//!
//! ```text
//! K(θ,s) = e^{pθ}e^{pτ}g₂₁(τ+θ)(e^{−ps}g₂₁(−s) − g₂₂(τ+s)) / (1 − e^{pτ}g₂₁(τ))
//!        + χ_{[−τ,θ]}(s)·e^{−ps}g₂₁(θ−s)
//!        − χ_{[−τ−θ,0]}(s)·g₂₂(θ+τ+s),
//! ```
//!
//! where `g_ij` are the entries of `e^{D₀t}`. The second indicator carries a
//! genuine value jump across the line `θ + τ + s = 0` (the first one is
//! harmless: `g₂₁(0) = 0`). Indicators use the closed convention, applied
//! with a tiny symmetric tolerance so that grid points lying on the line up
//! to rounding are treated as inside deterministically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::JumpKernel;

/// Degeneracy threshold for the kernel denominator `1 − e^{pτ}g₂₁(τ)`.
pub const EPS_DENOM: f64 = 1e-10;

/// Indicator boundaries are applied with this tolerance (scaled by
/// `max(τ, 1)`), so grid-aligned boundary points a few ulp off the line are
/// classified as inside, matching the closed-interval convention.
const INDICATOR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(
        "kernel denominator 1 − e^{{pτ}}g₂₁(τ) has modulus {modulus:.3e} ≤ {EPS_DENOM:.0e}; \
         ν₀ = {nu0} grazes the spectrum of the compound operator"
    )]
    DegenerateDenominator { modulus: f64, nu0: f64 },
    #[error("point (θ, s) = ({theta}, {s}) lies outside the square [−{tau}, 0]²")]
    DomainError { theta: f64, s: f64, tau: f64 },
}

/// Scalar parameters defining `D₀`, `p = −ν₀ + iω`, and all kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub a: f64,
    pub b: f64,
    /// Delay; must be positive.
    pub tau: f64,
    /// Shift of the spectral line `−ν₀ + iℝ`.
    pub nu0: f64,
    /// Frequency.
    pub omega: f64,
}

impl KernelParams {
    pub fn p(&self) -> Complex64 {
        Complex64::new(-self.nu0, self.omega)
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    fn indicator_tol(&self) -> f64 {
        INDICATOR_TOL * self.tau.max(1.0)
    }

    fn check_domain(&self, theta: f64, s: f64) -> Result<(), KernelError> {
        let tol = self.indicator_tol();
        let inside = |x: f64| x >= -self.tau - tol && x <= tol;
        if inside(theta) && inside(s) {
            Ok(())
        } else {
            Err(KernelError::DomainError {
                theta,
                s,
                tau: self.tau,
            })
        }
    }
}

/// Parameters of the scalar delay equation mapped onto the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassParams {
    pub gamma: f64,
    pub beta: f64,
    pub kappa: f64,
    pub tau_prime: f64,
}

/// Maps delay-equation constants to kernel parameters and the threshold Λ:
/// `Λ = ½τ′β((κ−1)²/κ + 1)`, `a = −τ′γ`, `b = τ′β − Λ`, `τ = 1`.
///
/// `ω` is not determined by the mapping and is returned as 0; set it per
/// frequency with [`KernelParams::with_omega`]. `ν₀` likewise remains the
/// caller's choice (returned as 0).
pub fn mg_map(mg: &MackeyGlassParams) -> (KernelParams, f64) {
    assert!(mg.kappa != 0.0, "kappa must be nonzero (division by κ in Λ)");
    let tb = mg.tau_prime * mg.beta;
    let lambda = 0.5 * tb * ((mg.kappa - 1.0).powi(2) / mg.kappa + 1.0);
    let params = KernelParams {
        a: -mg.tau_prime * mg.gamma,
        b: tb - lambda,
        tau: 1.0,
        nu0: 0.0,
        omega: 0.0,
    };
    (params, lambda)
}

/// A dense 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex2x2 {
    pub e11: Complex64,
    pub e12: Complex64,
    pub e21: Complex64,
    pub e22: Complex64,
}

impl Complex2x2 {
    pub fn identity() -> Self {
        Self {
            e11: Complex64::new(1.0, 0.0),
            e12: Complex64::new(0.0, 0.0),
            e21: Complex64::new(0.0, 0.0),
            e22: Complex64::new(1.0, 0.0),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.e11 * self.e22 - self.e12 * self.e21
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            e11: self.e11 * other.e11 + self.e12 * other.e21,
            e12: self.e11 * other.e12 + self.e12 * other.e22,
            e21: self.e21 * other.e11 + self.e22 * other.e21,
            e22: self.e21 * other.e12 + self.e22 * other.e22,
        }
    }
}

/// Builds `D₀ = [[−a, b], [−b·e^{−pτ}, a − p]]`.
pub fn build_d0(params: &KernelParams) -> Complex2x2 {
    assert!(params.tau > 0.0, "delay must be positive, got {}", params.tau);
    let p = params.p();
    Complex2x2 {
        e11: Complex64::new(-params.a, 0.0),
        e12: Complex64::new(params.b, 0.0),
        e21: -params.b * (-p * params.tau).exp(),
        e22: Complex64::new(params.a, 0.0) - p,
    }
}

/// `e^{D₀t}` via the closed 2×2 form; `sinh(δt)/δ` switches to its series
/// `t(1 + (δt)²/6 + (δt)⁴/120)` for `|δt| < 1e−6` (removable singularity at
/// `δ = 0`). `δ` is taken as the principal square root; the result does not
/// depend on that branch since `cosh` and `sinh(δt)/δ` are even in `δ`.
pub fn expm_d0(params: &KernelParams, t: f64) -> Complex2x2 {
    expm_d0_impl(params, t, false)
}

fn expm_d0_impl(params: &KernelParams, t: f64, flip_delta: bool) -> Complex2x2 {
    let d = build_d0(params);
    let alpha = 0.5 * (d.e11 + d.e22);
    let m11 = d.e11 - alpha;
    let m22 = d.e22 - alpha;
    let delta2 = -(m11 * m22 - d.e12 * d.e21);
    let mut delta = delta2.sqrt();
    if flip_delta {
        delta = -delta;
    }
    let z = delta * t;
    // sinh(δt)/δ, with the series once δt is small enough that the direct
    // quotient loses accuracy (and to cover δ = 0 exactly).
    let shc = if z.norm() < 1e-6 {
        let z2 = z * z;
        (1.0 + z2 / 6.0 + z2 * z2 / 120.0) * t
    } else {
        z.sinh() / delta
    };
    let ch = z.cosh();
    let ea = (alpha * t).exp();
    let diag = ch - alpha * shc;
    Complex2x2 {
        e11: ea * (diag + shc * d.e11),
        e12: ea * (shc * d.e12),
        e21: ea * (shc * d.e21),
        e22: ea * (diag + shc * d.e22),
    }
}

/// The kernel denominator `1 − e^{pτ}g₂₁(τ)`.
///
/// Errors with [`KernelError::DegenerateDenominator`] when its modulus is at
/// most [`EPS_DENOM`], the runtime proxy for `ν₀` hitting the spectrum.
pub fn denom(params: &KernelParams) -> Result<Complex64, KernelError> {
    let p = params.p();
    let g = expm_d0(params, params.tau);
    let d = Complex64::new(1.0, 0.0) - (p * params.tau).exp() * g.e21;
    if d.norm() <= EPS_DENOM {
        Err(KernelError::DegenerateDenominator {
            modulus: d.norm(),
            nu0: params.nu0,
        })
    } else {
        Ok(d)
    }
}

/// The transfer kernel with its denominator validated and cached.
#[derive(Debug, Clone)]
pub struct TransferKernel {
    params: KernelParams,
    den: Complex64,
}

impl TransferKernel {
    pub fn new(params: KernelParams) -> Result<Self, KernelError> {
        assert!(params.tau > 0.0, "delay must be positive, got {}", params.tau);
        let den = denom(&params)?;
        Ok(Self { params, den })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn denominator(&self) -> Complex64 {
        self.den
    }

    /// `K(θ, s)` with the domain checked (errors outside `[−τ, 0]²`).
    pub fn eval_checked(&self, theta: f64, s: f64) -> Result<Complex64, KernelError> {
        self.params.check_domain(theta, s)?;
        Ok(self.eval_terms(theta, s, true))
    }

    fn eval_terms(&self, theta: f64, s: f64, include_jump_term: bool) -> Complex64 {
        let params = &self.params;
        let p = params.p();
        let tau = params.tau;
        let tol = params.indicator_tol();

        let g21_tau_theta = expm_d0(params, tau + theta).e21;
        let g21_neg_s = expm_d0(params, -s).e21;
        let g22_tau_s = expm_d0(params, tau + s).e22;

        let mut val = (p * theta).exp() * (p * tau).exp() * g21_tau_theta
            * ((-p * s).exp() * g21_neg_s - g22_tau_s)
            / self.den;
        if s <= theta + tol {
            val += (-p * s).exp() * expm_d0(params, theta - s).e21;
        }
        if include_jump_term && theta + tau + s >= -tol {
            val -= expm_d0(params, theta + tau + s).e22;
        }
        val
    }
}

impl JumpKernel for TransferKernel {
    fn tau(&self) -> f64 {
        self.params.tau
    }
    fn eval(&self, theta: f64, s: f64) -> Complex64 {
        self.eval_terms(theta, s, true)
    }
    fn eval_outside(&self, theta: f64, s: f64) -> Complex64 {
        self.eval_terms(theta, s, false)
    }
}

/// `K(θ, s)` as a one-shot call (builds the denominator each time); prefer
/// [`TransferKernel`] for grid evaluation.
pub fn kernel_k(params: &KernelParams, theta: f64, s: f64) -> Result<Complex64, KernelError> {
    TransferKernel::new(*params)?.eval_checked(theta, s)
}

/// The asymptotic kernel `K̄(θ,s) = −e^{aθ}χ_{[−τ−θ,0]}(s)e^{a(τ+s)}e^{−p(τ+s)}`.
pub fn kernel_kbar(params: &KernelParams, theta: f64, s: f64) -> Result<Complex64, KernelError> {
    params.check_domain(theta, s)?;
    Ok(AsymptoticKernel::new(*params).eval(theta, s))
}

/// `|K̄|(θ,s) = e^{aθ}χ_{[−τ−θ,0]}(s)e^{(a+ν₀)(τ+s)}`; independent of ω.
pub fn kernel_kbar_abs(params: &KernelParams, theta: f64, s: f64) -> Result<f64, KernelError> {
    params.check_domain(theta, s)?;
    let tol = params.indicator_tol();
    if theta + params.tau + s >= -tol {
        Ok((params.a * theta).exp() * ((params.a + params.nu0) * (params.tau + s)).exp())
    } else {
        Ok(0.0)
    }
}

/// The asymptotic kernel as a grid-samplable [`JumpKernel`].
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticKernel {
    params: KernelParams,
}

impl AsymptoticKernel {
    pub fn new(params: KernelParams) -> Self {
        assert!(params.tau > 0.0, "delay must be positive, got {}", params.tau);
        Self { params }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }
}

impl JumpKernel for AsymptoticKernel {
    fn tau(&self) -> f64 {
        self.params.tau
    }
    fn eval(&self, theta: f64, s: f64) -> Complex64 {
        let params = &self.params;
        let tol = params.indicator_tol();
        if theta + params.tau + s >= -tol {
            let p = params.p();
            let amp = (params.a * theta).exp() * (params.a * (params.tau + s)).exp();
            -amp * (-p * (params.tau + s)).exp()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
    fn eval_outside(&self, _theta: f64, _s: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}
