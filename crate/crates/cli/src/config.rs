//! Run configuration: file parsing (TOML or JSON by extension), defaults
//! matching the reference experiment, and validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use schur_core::kernel::{mg_map, KernelParams, MackeyGlassParams};

use crate::CliError;

/// Directly specified kernel constants, as an alternative to the
/// delay-equation section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Delay-equation constants; mapped through `mg_map`. Exactly one of
    /// `mackey_glass` and `kernel` must be present.
    #[serde(default)]
    pub mackey_glass: Option<MackeyGlassParams>,
    /// Direct kernel constants.
    #[serde(default)]
    pub kernel: Option<KernelSection>,
    /// Spectral-line shift `ν₀`.
    #[serde(default = "defaults::nu0")]
    pub nu0: f64,
    /// Optimization grid size (odd).
    #[serde(default = "defaults::grid_m")]
    pub grid_m: usize,
    /// Verification grid size (odd).
    #[serde(default = "defaults::fine_m")]
    pub fine_m: usize,
    #[serde(default = "defaults::omega_min")]
    pub omega_min: f64,
    #[serde(default = "defaults::omega_max")]
    pub omega_max: f64,
    #[serde(default = "defaults::omega_step")]
    pub omega_step: f64,
    /// Proximal cap on the per-iteration descent of the level `t`.
    #[serde(default = "defaults::delta_step")]
    pub delta_step: f64,
    /// Mode cutoff for the per-frequency truncation norm.
    #[serde(default = "defaults::trunc_n")]
    pub trunc_n: usize,
    /// Mode cutoff for the asymptotic-kernel baseline norm.
    #[serde(default = "defaults::asymptotic_trunc_n")]
    pub asymptotic_trunc_n: usize,
    /// Seed for the weight-model initialization.
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
}

mod defaults {
    use std::path::PathBuf;

    pub fn nu0() -> f64 {
        0.01
    }
    pub fn grid_m() -> usize {
        251
    }
    pub fn fine_m() -> usize {
        1001
    }
    pub fn omega_min() -> f64 {
        -20.0
    }
    pub fn omega_max() -> f64 {
        20.0
    }
    pub fn omega_step() -> f64 {
        0.05
    }
    pub fn delta_step() -> f64 {
        0.005
    }
    pub fn trunc_n() -> usize {
        50
    }
    pub fn asymptotic_trunc_n() -> usize {
        1000
    }
    pub fn seed() -> u64 {
        super::DEFAULT_SEED
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

/// Seed used when the config does not pin one. Chosen so the cold start at
/// ω = 0 begins from a moderate level `t` and converges well inside the
/// iteration budget.
pub const DEFAULT_SEED: u64 = 11;

impl RunConfig {
    /// Parses a config file, dispatching on the `.toml` / `.json` extension,
    /// and validates it.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(crate::io_err(path))?;
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        let cfg: RunConfig = match ext.as_str() {
            "toml" => toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            "json" => serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            other => {
                return Err(CliError::Config(format!(
                    "{}: unsupported config extension `{other}` (expected .toml or .json)",
                    path.display()
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match (&self.mackey_glass, &self.kernel) {
            (None, None) => {
                return bad("one of `mackey_glass` or `kernel` must be given".into())
            }
            (Some(_), Some(_)) => {
                return bad("`mackey_glass` and `kernel` are mutually exclusive".into())
            }
            _ => {}
        }
        if let Some(k) = &self.kernel {
            if !(k.tau > 0.0) {
                return bad(format!("kernel.tau must be positive, got {}", k.tau));
            }
        }
        if let Some(mg) = &self.mackey_glass {
            if mg.kappa == 0.0 {
                return bad("mackey_glass.kappa must be nonzero".into());
            }
        }
        for (name, m) in [("grid_m", self.grid_m), ("fine_m", self.fine_m)] {
            if m < 3 || m % 2 == 0 {
                return bad(format!("{name} must be odd and ≥ 3, got {m}"));
            }
        }
        if !(self.omega_step > 0.0) {
            return bad(format!("omega_step must be positive, got {}", self.omega_step));
        }
        if self.omega_min > self.omega_max {
            return bad(format!(
                "omega_min {} exceeds omega_max {}",
                self.omega_min, self.omega_max
            ));
        }
        if !(self.delta_step > 0.0) {
            return bad(format!("delta_step must be positive, got {}", self.delta_step));
        }
        if !self.nu0.is_finite() {
            return bad(format!("nu0 must be finite, got {}", self.nu0));
        }
        Ok(())
    }

    /// Kernel constants at ω = 0 with `nu0` applied, plus the threshold Λ
    /// when the config came from delay-equation constants.
    pub fn kernel_params(&self) -> (KernelParams, Option<f64>) {
        match (&self.mackey_glass, &self.kernel) {
            (Some(mg), None) => {
                let (params, lambda) = mg_map(mg);
                (KernelParams { nu0: self.nu0, ..params }, Some(lambda))
            }
            (None, Some(k)) => (
                KernelParams {
                    a: k.a,
                    b: k.b,
                    tau: k.tau,
                    nu0: self.nu0,
                    omega: 0.0,
                },
                None,
            ),
            _ => unreachable!("validate() enforces exactly one kernel source"),
        }
    }

    /// The ascending sweep lattice `ω_i = omega_min + i·omega_step`.
    pub fn omegas(&self) -> Vec<f64> {
        let span = self.omega_max - self.omega_min;
        let count = (span / self.omega_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.omega_min + i as f64 * self.omega_step)
            .collect()
    }

    /// Index of `omega` on the sweep lattice, if it lies on it.
    pub fn lattice_index(&self, omega: f64) -> Option<usize> {
        let x = (omega - self.omega_min) / self.omega_step;
        let idx = x.round();
        let count = self.omegas().len();
        if (x - idx).abs() <= 1e-9 * (1.0 + x.abs()) && idx >= 0.0 && (idx as usize) < count {
            Some(idx as usize)
        } else {
            None
        }
    }

    /// Stable file stem for per-frequency outputs.
    pub fn file_key(&self, omega: f64) -> String {
        match self.lattice_index(omega) {
            Some(idx) => format!("omega_{idx:05}"),
            None => format!("omega_off_{omega:+.6e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn mg_config_text() -> &'static str {
        r#"
nu0 = 0.01
seed = 3

[mackey_glass]
gamma = 0.1
beta = 0.2
kappa = 10.0
tau_prime = 4.5
"#
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        f.write_all(mg_config_text().as_bytes()).unwrap();
        let cfg = RunConfig::load(f.path()).unwrap();
        assert_eq!(cfg.grid_m, 251);
        assert_eq!(cfg.fine_m, 1001);
        assert_eq!(cfg.omega_step, 0.05);
        assert_eq!(cfg.seed, 3);
        let (params, lambda) = cfg.kernel_params();
        assert!((params.a + 0.45).abs() < 1e-12);
        assert!((params.b + 3.195).abs() < 1e-12);
        assert!((lambda.unwrap() - 4.095).abs() < 1e-12);
    }

    #[test]
    fn json_parses_and_direct_kernel_works() {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        f.write_all(br#"{"kernel": {"a": 0.0, "b": 0.0, "tau": 1.0}, "nu0": 0.0}"#)
            .unwrap();
        let cfg = RunConfig::load(f.path()).unwrap();
        let (params, lambda) = cfg.kernel_params();
        assert_eq!(params.tau, 1.0);
        assert!(lambda.is_none());
    }

    #[test]
    fn rejects_bad_shapes() {
        let cases = [
            (r#"{"nu0": 0.01}"#, "one of"),
            (
                r#"{"kernel": {"a": 0, "b": 0, "tau": 1}, "grid_m": 250}"#,
                "odd",
            ),
            (
                r#"{"kernel": {"a": 0, "b": 0, "tau": 1}, "omega_step": 0.0}"#,
                "positive",
            ),
            (
                r#"{"kernel": {"a": 0, "b": 0, "tau": -1}}"#,
                "tau",
            ),
            (
                r#"{"kernel": {"a": 0, "b": 0, "tau": 1}, "omega_min": 3, "omega_max": 1}"#,
                "exceeds",
            ),
        ];
        for (text, needle) in cases {
            let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
            f.write_all(text.as_bytes()).unwrap();
            let err = RunConfig::load(f.path()).unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains(needle), "{msg} missing {needle}");
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn sweep_lattice_and_indexing() {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        f.write_all(
            br#"{"kernel": {"a": 0, "b": 0, "tau": 1},
                 "omega_min": -20, "omega_max": 20, "omega_step": 0.05}"#,
        )
        .unwrap();
        let cfg = RunConfig::load(f.path()).unwrap();
        let omegas = cfg.omegas();
        assert_eq!(omegas.len(), 801);
        assert!((omegas[0] + 20.0).abs() < 1e-12);
        assert!((omegas[800] - 20.0).abs() < 1e-9);
        assert_eq!(cfg.lattice_index(omegas[400]), Some(400));
        assert_eq!(cfg.lattice_index(0.012), None);
        assert_eq!(cfg.file_key(omegas[7]), "omega_00007");
    }
}
