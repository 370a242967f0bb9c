//! The four subcommands: single-frequency estimation, the resumable sweep,
//! baseline constants, and chart rendering.

use std::collections::BTreeSet;
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use schur_core::kernel::{KernelParams, TransferKernel};
use schur_core::minimax::{carryover, optimize, MinimaxOpts, OptState};
use schur_core::model::{ratios, schur_estimate, SchurFamily, SchurModel};
use schur_core::norms::{analytic_kbar_truncation, l2_kbar_closed, l2_norm, matrix_norm, truncation_matrix};
use schur_core::quad::{sample_abs, JumpRule, QuadGrid};

use crate::config::RunConfig;
use crate::io::{
    append_line, write_history, write_json, CsvTable, OutputLayout, SweepMeta, SweepRecord,
    CSV_HEADER,
};
use crate::{plot, CliError};

/// Fine-grid estimates more than 5% above the coarse-grid optimum indicate
/// the optimization grid under-resolved the ratio field; worth a warning,
/// not an abort.
const FINE_COARSE_ALARM: f64 = 1.05;

/// The sweep CSV promises `schur_estimate ≥ truncation_norm − 2e−3`.
const BRACKET_SLACK: f64 = 2e-3;

fn num_err(e: impl Display) -> CliError {
    CliError::Solver(e.to_string())
}

fn grid(cfg_m: usize, tau: f64) -> Result<QuadGrid, CliError> {
    QuadGrid::new(tau, cfg_m).map_err(|e| CliError::Config(e.to_string()))
}

/// Everything produced for one frequency.
pub struct FrequencyRun {
    pub record: SweepRecord,
    pub state: OptState,
    /// Present when the inner solver broke down; the record then carries the
    /// best state reached and is flagged unconverged.
    pub solver_error: Option<String>,
}

/// Optimizes the bound at one frequency and re-evaluates everything on the
/// fine grid.
///
/// A degenerate denominator surfaces as an error; an inner-solver breakdown
/// does not — the partial result comes back flagged so callers can persist
/// it before deciding whether to abort.
pub fn run_frequency(
    cfg: &RunConfig,
    base: &KernelParams,
    omega: f64,
    warm: Option<&OptState>,
) -> Result<FrequencyRun, CliError> {
    let params = base.with_omega(omega);
    let kernel = TransferKernel::new(params)?;
    let tau = params.tau;

    // Optimize on the coarse grid.
    let gt = grid(cfg.grid_m, tau)?;
    let gs = grid(cfg.grid_m, tau)?;
    let kabs = sample_abs(&kernel, &gt, &gs, JumpRule::MeanAbs);
    let family = SchurFamily::new(&kabs, &gt, &gs).expect("grids sized to the sample matrix");
    let opts = MinimaxOpts { delta_step: cfg.delta_step, ..MinimaxOpts::default() };
    let start = match warm {
        Some(prev) => carryover(prev, &family, &opts),
        None => OptState::init(&family, SchurModel::random_init(cfg.seed).flat().to_vec()),
    };
    let (state, converged, solver_error) = match optimize(start, &family, &opts) {
        Ok((state, converged)) => (state, converged, None),
        Err(failure) => {
            let detail = failure.detail.clone();
            (failure.state, false, Some(detail))
        }
    };
    let coarse_estimate = schur_estimate(&family.field(&state.params));

    // Re-evaluate the optimized weights on the fine grid; that value is what
    // the record reports, since it is honest about off-grid behavior.
    let gtf = grid(cfg.fine_m, tau)?;
    let gsf = grid(cfg.fine_m, tau)?;
    let kabs_fine = sample_abs(&kernel, &gtf, &gsf, JumpRule::MeanAbs);
    let model = SchurModel::from_flat(state.params.clone()).map_err(num_err)?;
    let field_fine = ratios(&kabs_fine, &model, &gtf, &gsf).map_err(num_err)?;
    let estimate = schur_estimate(&field_fine);
    if estimate > FINE_COARSE_ALARM * coarse_estimate {
        eprintln!(
            "warning: omega {omega}: fine-grid estimate {estimate:.6} exceeds \
             {FINE_COARSE_ALARM} x coarse optimum {coarse_estimate:.6}; \
             the optimization grid may be too coarse"
        );
    }

    let kabs_rms = sample_abs(&kernel, &gtf, &gsf, JumpRule::RootMeanSquareAbs);
    let l2 = l2_norm(&kabs_rms, &gtf, &gsf).map_err(num_err)?;
    let tm = truncation_matrix(&kernel, cfg.trunc_n, &gtf, &gsf).map_err(num_err)?;
    let trunc = matrix_norm(&tm).map_err(num_err)?;
    if estimate < trunc - BRACKET_SLACK {
        eprintln!(
            "warning: omega {omega}: estimate {estimate:.6} dips below the \
             truncation lower bound {trunc:.6} by more than {BRACKET_SLACK}"
        );
    }

    let (p_samples, q_samples) = model.eval_pq(&gtf, &gsf);
    let record = SweepRecord {
        omega,
        schur_estimate: estimate,
        l2_norm_k: l2,
        truncation_norm: trunc,
        iterations: state.iteration,
        ref_points: state.refs.len(),
        converged,
        p_samples,
        q_samples,
    };
    Ok(FrequencyRun { record, state, solver_error })
}

fn persist_run(layout: &OutputLayout, key: &str, run: &FrequencyRun) -> Result<(), CliError> {
    write_json(&layout.state_file(key), &run.state)?;
    write_json(&layout.record_file(key), &run.record)?;
    write_history(&layout.history_file(key), &run.state.history)
}

fn report_line(run: &FrequencyRun) -> String {
    let r = &run.record;
    format!(
        "omega {:+.4}: estimate {:.9} (l2 {:.9}, truncation {:.9}) after {} iterations, {} references{}",
        r.omega,
        r.schur_estimate,
        r.l2_norm_k,
        r.truncation_norm,
        r.iterations,
        r.ref_points,
        if r.converged { "" } else { " [not converged]" }
    )
}

/// `estimate`: one frequency, cold start, all outputs persisted.
pub fn cmd_estimate(cfg: &RunConfig, omega: f64) -> Result<(), CliError> {
    let layout = OutputLayout::new(&cfg.output_dir);
    layout.ensure_dirs()?;
    let (base, _) = cfg.kernel_params();
    let run = run_frequency(cfg, &base, omega, None)?;
    persist_run(&layout, &cfg.file_key(omega), &run)?;
    println!("{}", report_line(&run));
    match run.solver_error {
        Some(detail) => Err(CliError::Solver(detail)),
        None => Ok(()),
    }
}

/// `sweep`: walk the frequency lattice in ascending order, warm-starting
/// each frequency from its predecessor and appending to the CSV as rows
/// complete. With `resume`, frequencies already present in the CSV are
/// skipped and the warm-start chain picks up from the stored states.
pub fn cmd_sweep(cfg: &RunConfig, resume: bool) -> Result<(), CliError> {
    let layout = OutputLayout::new(&cfg.output_dir);
    layout.ensure_dirs()?;
    let (base, _) = cfg.kernel_params();
    let omegas = cfg.omegas();
    let csv_path = layout.sweep_csv();

    let mut completed: BTreeSet<usize> = BTreeSet::new();
    if resume && csv_path.exists() {
        let table = CsvTable::read(&csv_path)?;
        for omega in table.f64_column("omega")? {
            if let Some(idx) = cfg.lattice_index(omega) {
                completed.insert(idx);
            }
        }
    } else {
        crate::io::write_string(&csv_path, &format!("{CSV_HEADER}\n"))?;
    }
    write_json(
        &layout.meta(),
        &SweepMeta {
            direction: "ascending".to_string(),
            omega_min: cfg.omega_min,
            omega_max: cfg.omega_max,
            omega_step: cfg.omega_step,
            omega_count: omegas.len(),
        },
    )?;

    let mut warm: Option<OptState> = None;
    let mut failures: Vec<f64> = Vec::new();
    for (idx, &omega) in omegas.iter().enumerate() {
        let key = cfg.file_key(omega);
        if completed.contains(&idx) {
            // Keep the warm-start chain intact across skipped rows.
            if let Ok(state) = crate::io::read_json::<OptState>(&layout.state_file(&key)) {
                warm = Some(state);
            }
            continue;
        }
        let run = run_frequency(cfg, &base, omega, warm.as_ref())?;
        persist_run(&layout, &key, &run)?;
        append_line(&csv_path, &run.record.csv_row())?;
        println!("{}", report_line(&run));
        if let Some(detail) = &run.solver_error {
            eprintln!("warning: omega {omega}: solver failed ({detail}); continuing sweep");
            failures.push(omega);
        }
        warm = Some(run.state);
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "{} of {} frequencies did not converge cleanly (first at omega {})",
            failures.len(),
            omegas.len(),
            failures[0]
        )))
    }
}

/// The three frequency-independent reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// Reciprocal contraction threshold, when the config specifies the
    /// delay-equation constants; absent for a direct kernel.
    pub lambda_inv: Option<f64>,
    /// Closed-form L2 norm of the asymptotic kernel.
    pub l2_kbar: f64,
    /// Operator norm of the asymptotic kernel's mode compression.
    pub t_kbar_norm: f64,
}

pub fn compute_baselines(cfg: &RunConfig) -> Result<Baselines, CliError> {
    let (params, lambda) = cfg.kernel_params();
    let tm = analytic_kbar_truncation(&params, cfg.asymptotic_trunc_n);
    Ok(Baselines {
        lambda_inv: lambda.map(|l| 1.0 / l),
        l2_kbar: l2_kbar_closed(&params),
        t_kbar_norm: matrix_norm(&tm).map_err(num_err)?,
    })
}

/// `baselines`: compute the reference values and write them as JSON.
pub fn cmd_baselines(cfg: &RunConfig) -> Result<(), CliError> {
    let layout = OutputLayout::new(&cfg.output_dir);
    layout.ensure_dirs()?;
    let baselines = compute_baselines(cfg)?;
    write_json(&layout.baselines(), &baselines)?;
    match baselines.lambda_inv {
        Some(li) => println!("lambda_inv     {}", crate::io::fmt(li)),
        None => println!("lambda_inv     (not applicable: direct kernel constants)"),
    }
    println!("l2_kbar        {}", crate::io::fmt(baselines.l2_kbar));
    println!("t_kbar_norm    {}", crate::io::fmt(baselines.t_kbar_norm));
    Ok(())
}

/// `plot`: render the sweep, convergence, and weight-profile charts.
pub fn cmd_plot(cfg: &RunConfig) -> Result<(), CliError> {
    let layout = OutputLayout::new(&cfg.output_dir);
    let baselines_path = layout.baselines();
    let baselines = if baselines_path.exists() {
        crate::io::read_json::<Baselines>(&baselines_path)?
    } else {
        let b = compute_baselines(cfg)?;
        layout.ensure_dirs()?;
        write_json(&baselines_path, &b)?;
        b
    };
    plot::render_all(cfg, &layout, &baselines)
}
