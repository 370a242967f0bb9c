//! Property tests for the structural invariants of the kernel and the
//! weighted ratio machinery.

use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use schur_core::kernel::{
    expm_d0, kernel_kbar, kernel_kbar_abs, mg_map, KernelParams, MackeyGlassParams, TransferKernel,
};
use schur_core::model::{grid_max, ratios, ratios_from_pq, schur_estimate, SchurModel};
use schur_core::norms::{nystrom_norm, truncation_from_samples};
use schur_core::quad::{integrate_1d, sample_abs, JumpRule, QuadGrid};

fn mg_kernel_params() -> KernelParams {
    let (params, _) = mg_map(&MackeyGlassParams {
        gamma: 0.1,
        beta: 0.2,
        kappa: 10.0,
        tau_prime: 4.5,
    });
    KernelParams { nu0: 0.01, ..params }
}

/// Modulus samples of the delay kernel at ω = 0 on a small shared grid.
fn shared_kabs() -> &'static (Array2<f64>, usize) {
    static KABS: OnceLock<(Array2<f64>, usize)> = OnceLock::new();
    KABS.get_or_init(|| {
        let params = mg_kernel_params();
        let kernel = TransferKernel::new(params).unwrap();
        let g = QuadGrid::new(params.tau, 21).unwrap();
        (sample_abs(&kernel, &g, &g, JumpRule::MeanAbs), 21)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Flipping the frequency sign conjugates the kernel pointwise.
    #[test]
    fn kernel_conjugate_symmetric_in_frequency(
        a in -2.0f64..2.0,
        b in -3.5f64..3.5,
        tau in 0.4f64..1.6,
        nu0 in 0.0f64..0.3,
        omega in 0.0f64..60.0,
        tf in 0.0f64..1.0,
        sf in 0.0f64..1.0,
    ) {
        let pp = KernelParams { a, b, tau, nu0, omega };
        let pm = pp.with_omega(-omega);
        let kp = TransferKernel::new(pp);
        let km = TransferKernel::new(pm);
        prop_assume!(kp.is_ok() && km.is_ok());
        let theta = -tau * tf;
        let s = -tau * sf;
        let vp = kp.unwrap().eval_checked(theta, s).unwrap();
        let vm = km.unwrap().eval_checked(theta, s).unwrap();
        prop_assert!(
            (vm - vp.conj()).norm() <= 1e-10 * (1.0 + vp.norm()),
            "K(−ω) = {vm}, conj K(ω) = {}", vp.conj()
        );
    }

    /// The asymptotic kernel's modulus never depends on the frequency.
    #[test]
    fn asymptote_modulus_frequency_free(
        omega in -500.0f64..500.0,
        tf in 0.0f64..1.0,
        sf in 0.0f64..1.0,
    ) {
        let base = mg_kernel_params();
        let po = base.with_omega(omega);
        let theta = -base.tau * tf;
        let s = -base.tau * sf;
        let modulus = kernel_kbar(&po, theta, s).unwrap().norm();
        let direct = kernel_kbar_abs(&po, theta, s).unwrap();
        let at_zero = kernel_kbar_abs(&base, theta, s).unwrap();
        prop_assert!((modulus - direct).abs() <= 1e-13 * (1.0 + direct));
        prop_assert!((direct - at_zero).abs() == 0.0);
    }

    /// Exponential semigroup property over random parameter draws.
    #[test]
    fn exponential_semigroup(
        a in -2.0f64..2.0,
        b in -3.0f64..3.0,
        nu0 in 0.0f64..0.4,
        omega in -30.0f64..30.0,
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
    ) {
        let params = KernelParams { a, b, tau: 1.0, nu0, omega };
        let whole = expm_d0(&params, t1 + t2);
        let split = expm_d0(&params, t1).mul(&expm_d0(&params, t2));
        let scale = 1.0 + whole.e11.norm().max(whole.e12.norm())
            .max(whole.e21.norm()).max(whole.e22.norm());
        for (g, w) in [
            (split.e11, whole.e11),
            (split.e12, whole.e12),
            (split.e21, whole.e21),
            (split.e22, whole.e22),
        ] {
            prop_assert!((g - w).norm() <= 1e-11 * scale);
        }
    }

    /// The weight-ratio estimate certifies the weighted sample matrix: its
    /// square dominates the largest singular value for every weight model.
    #[test]
    fn estimate_dominates_sampled_operator_norm(seed in 0u64..1_000_000) {
        let (kabs, m) = shared_kabs();
        let g = QuadGrid::new(1.0, *m).unwrap();
        let model = SchurModel::random_init(seed);
        let field = ratios(kabs, &model, &g, &g).unwrap();
        let estimate = schur_estimate(&field);
        let sigma = nystrom_norm(kabs, &g, &g).unwrap();
        prop_assert!(
            estimate + 1e-10 >= sigma,
            "estimate {estimate} below σ {sigma} at seed {seed}"
        );
    }

    /// Jointly rescaling both weight families leaves every ratio pair
    /// product unchanged.
    #[test]
    fn ratio_pairs_invariant_under_joint_scaling(
        seed in 0u64..1_000_000,
        alpha in 0.1f64..10.0,
        beta in 0.1f64..10.0,
    ) {
        let (kabs, m) = shared_kabs();
        let g = QuadGrid::new(1.0, *m).unwrap();
        let model = SchurModel::random_init(seed);
        let (p, q) = model.eval_pq(&g, &g);
        let base = ratios_from_pq(kabs, p.clone(), q.clone(), &g, &g).unwrap();
        let scaled = ratios_from_pq(
            kabs,
            p.iter().map(|v| alpha * v).collect(),
            q.iter().map(|v| beta * v).collect(),
            &g,
            &g,
        )
        .unwrap();
        for i in 0..*m {
            for j in 0..*m {
                let x = base.rx[i] * base.ry[j];
                let y = scaled.rx[i] * scaled.ry[j];
                prop_assert!((x - y).abs() <= 1e-11 * (1.0 + x.abs()));
            }
        }
    }

    /// The separable argmax equals the brute-force maximum of the full
    /// outer product.
    #[test]
    fn grid_max_is_outer_product_max(seed in 0u64..1_000_000) {
        let (kabs, m) = shared_kabs();
        let g = QuadGrid::new(1.0, *m).unwrap();
        let model = SchurModel::random_init(seed);
        let field = ratios(kabs, &model, &g, &g).unwrap();
        let (fmax, _) = grid_max(&field);
        let mut brute = f64::NEG_INFINITY;
        for i in 0..*m {
            for j in 0..*m {
                brute = brute.max(field.rx[i] * field.ry[j]);
            }
        }
        prop_assert!((fmax - brute).abs() <= 1e-15 * (1.0 + brute.abs()));
    }

    /// Simpson weights integrate cubics exactly on any admissible grid.
    #[test]
    fn simpson_exact_on_cubics(
        c0 in -2.0f64..2.0,
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        c3 in -2.0f64..2.0,
        tau in 0.5f64..2.0,
        msel in 0usize..3,
    ) {
        let m = [5usize, 11, 251][msel];
        let g = QuadGrid::new(tau, m).unwrap();
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| c0 + x * (c1 + x * (c2 + x * c3)))
            .collect();
        let got = integrate_1d(&vals, &g).unwrap();
        // ∫_{−τ}^0 = c₀τ − c₁τ²/2 + c₂τ³/3 − c₃τ⁴/4.
        let want = c0 * tau - c1 * tau * tau / 2.0 + c2 * tau.powi(3) / 3.0
            - c3 * tau.powi(4) / 4.0;
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    /// Mode compressions nest: a larger cutoff reproduces the smaller one on
    /// the shared index range.
    #[test]
    fn mode_compressions_nest(seed in 0u64..1_000_000) {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5;
        let g = QuadGrid::new(1.0, 11).unwrap();
        let samples = Array2::from_shape_fn((11, 11), |_| Complex64::new(unit(), unit()));
        let t3 = truncation_from_samples(&samples, 3, &g, &g).unwrap();
        let t5 = truncation_from_samples(&samples, 5, &g, &g).unwrap();
        for k in -3i64..=3 {
            for l in -3i64..=3 {
                let d = (t3.entry(k, l) - t5.entry(k, l)).norm();
                prop_assert!(d <= 1e-15, "modes ({k},{l}) differ by {d}");
            }
        }
    }
}
