//! Command-line surface and sweep orchestration.
//!
//! Subcommands: `run` (one simulation), `chi` (susceptibility curves),
//! `sweep` (deterministic parallel parameter sweeps), `compare`
//! (field-history L2 comparison of two run directories), `presets`
//! (list/emit shipped scenarios). Exit codes: 0 success, 1 validation,
//! 2 numerical divergence, 3 io.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::analysis;
use crate::config::{self, Backend, BlockadeParams, ModelVariant, RawConfig};
use crate::io::{self, IoError};
use crate::propagation::{self, RunError};

#[derive(Parser)]
#[command(
    name = "rydpulse",
    version,
    about = "Interacting photon-pulse dynamics in Rydberg-EIT media"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file and write its outputs.
    Run(RunArgs),
    /// Tabulate the steady-state susceptibility over a spectral sweep.
    Chi(ChiArgs),
    /// Run a cartesian parameter sweep with a parallel worker pool.
    Sweep(SweepArgs),
    /// Compare the field histories of two run directories (relative L2).
    Compare(CompareArgs),
    /// List or emit the shipped scenario presets.
    Presets(PresetsArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the config's backend (quasistatic | mol).
    #[arg(long)]
    backend: Option<String>,
    /// Override the config's variant (full | constantv | meanfield | adiabatic | blockade).
    #[arg(long)]
    variant: Option<String>,
    /// Constant potential V⁰ (rad/µs) for the constantv variant.
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    /// Blockade radius (µm) for the blockade variant.
    #[arg(long)]
    blockade_radius: Option<f64>,
    /// Blockade potential (rad/µs) for the blockade variant.
    #[arg(long, allow_hyphen_values = true)]
    blockade_v: Option<f64>,
    /// Reduced light speed (µm/µs) for the mol backend.
    #[arg(long)]
    c_eff: Option<f64>,
    /// Also write |P| and V histories and the final complex state.
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct ChiArgs {
    /// One-photon detuning Δp, rad/µs.
    #[arg(long, allow_hyphen_values = true)]
    deltap: f64,
    /// Control Rabi frequency Ω_c, rad/µs.
    #[arg(long)]
    omegac: f64,
    /// Intermediate decay γ, rad/µs.
    #[arg(long)]
    gamma: f64,
    /// Rydberg decay γ′, rad/µs.
    #[arg(long, default_value_t = 0.0)]
    gammar: f64,
    /// Constant potential V⁰, rad/µs.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v0: f64,
    /// Spectral sweep lo:hi:n over the detuning axis, rad/µs.
    #[arg(long, allow_hyphen_values = true)]
    sweep: String,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Swept key and range, e.g. `run.v0=-4:0:9`.
    #[arg(long, allow_hyphen_values = true)]
    vary: String,
    #[arg(long)]
    out: PathBuf,
    /// Worker pool size.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Keep per-run output directories (summary only when absent).
    #[arg(long)]
    keep_runs: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Maximum allowed relative L2 distance.
    #[arg(long)]
    tol: f64,
}

#[derive(Args)]
struct PresetsArgs {
    /// `list` or `emit`.
    action: String,
    /// Preset name for `emit`.
    name: Option<String>,
    /// Output path for `emit` (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit code mapping shared by the binary and tests.
fn exit_code_for_run_error(e: &RunError) -> i32 {
    match e {
        RunError::Divergence { .. } | RunError::Nan { .. } => 2,
        RunError::Kernel(crate::potential::KernelError::CacheIo(_)) => 3,
        _ => 1,
    }
}

fn exit_code_for_io_error(e: &IoError) -> i32 {
    match e {
        IoError::Io(_) => 3,
        _ => 1,
    }
}

/// Parse `lo:hi:n` into n evenly spaced values (inclusive endpoints).
pub fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range '{spec}' is not lo:hi:n"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| format!("bad range start '{}'", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|_| format!("bad range end '{}'", parts[1]))?;
    let n: usize = parts[2].parse().map_err(|_| format!("bad range count '{}'", parts[2]))?;
    Ok(match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    })
}

/// Set a swept configuration key. `pulses.*` keys apply to every pulse.
pub fn apply_vary(raw: &mut RawConfig, key: &str, value: f64) -> Result<(), String> {
    match key {
        "run.v0" => raw.run.v0 = Some(value),
        "run.blockade.radius" => {
            let v_in = raw.run.blockade.map(|b| b.v_in).unwrap_or(0.0);
            raw.run.blockade = Some(BlockadeParams { radius: value, v_in });
        }
        "run.blockade.v_in" => {
            let radius = raw.run.blockade.map(|b| b.radius).unwrap_or(0.0);
            raw.run.blockade = Some(BlockadeParams { radius, v_in: value });
        }
        "medium.coupling_g" => raw.medium.coupling_g = value,
        "medium.separation" => raw.medium.separation = value,
        "medium.c6" => {
            raw.medium.c6 = Some(value);
            raw.medium.c6_ghz_um6 = None;
        }
        "medium.gamma_r" => raw.medium.gamma_r = value,
        "control.omega_c0" => match &mut raw.control {
            crate::model::ControlSchedule::Constant { omega_c0 } => *omega_c0 = value,
            crate::model::ControlSchedule::TanhSwitch { omega_c0, .. } => *omega_c0 = value,
        },
        "pulses.delta_p" => {
            for p in &mut raw.pulses {
                p.delta_p = value;
            }
        }
        "pulses.tau_p" => {
            for p in &mut raw.pulses {
                p.tau_p = value;
            }
        }
        "pulses.omega_p_max" => {
            for p in &mut raw.pulses {
                p.omega_p_max = value;
            }
        }
        other => return Err(format!("unknown sweep key '{other}'")),
    }
    Ok(())
}

/// One row of a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub transmission: Vec<f64>,
    pub v_g_measured: Option<f64>,
    pub potential_peak_gamma: f64,
    pub status: String,
}

/// Cartesian sweep over one key with a deterministic ordered merge.
///
/// Each worker runs an independent simulation; rows are keyed by sweep index
/// so the summary is identical whatever the pool size. Per-run outputs land
/// in `out_dir/run_NNN` when `out_dir` is given.
pub fn sweep_orchestrate(
    base: &RawConfig,
    key: &str,
    values: &[f64],
    jobs: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, String> {
    let jobs = jobs.max(1);
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; values.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(values.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= values.len() {
                    break;
                }
                let mut raw = base.clone();
                let row = match apply_vary(&mut raw, key, values[i]) {
                    Err(e) => SweepRow {
                        index: i,
                        value: values[i],
                        transmission: Vec::new(),
                        v_g_measured: None,
                        potential_peak_gamma: f64::NAN,
                        status: format!("error: {e}"),
                    },
                    Ok(()) => match config::validate_config(&raw)
                        .map_err(RunError::from)
                        .and_then(|cfg| propagation::run(&cfg))
                    {
                        Ok(result) => {
                            let transmission: Vec<f64> = (0..result.pulses.len())
                                .map(|l| analysis::transmission(&result, l))
                                .collect();
                            let row = SweepRow {
                                index: i,
                                value: values[i],
                                transmission,
                                v_g_measured: analysis::measured_group_velocity(&result, 0),
                                potential_peak_gamma: analysis::potential_peak(&result)
                                    / result.config.medium.gamma,
                                status: "ok".to_string(),
                            };
                            if let Some(dir) = out_dir {
                                let run_dir = dir.join(format!("run_{i:03}"));
                                if let Err(e) = io::write_result(&result, &run_dir, false) {
                                    return_row(&rows, SweepRow {
                                        status: format!("error: {e}"),
                                        ..row
                                    });
                                    continue;
                                }
                            }
                            row
                        }
                        Err(e) => SweepRow {
                            index: i,
                            value: values[i],
                            transmission: Vec::new(),
                            v_g_measured: None,
                            potential_peak_gamma: f64::NAN,
                            status: format!("error: {e}"),
                        },
                    },
                };
                return_row(&rows, row);
            });
        }
    });
    let rows = rows.into_inner().unwrap();
    Ok(rows.into_iter().map(|r| r.expect("all rows filled")).collect())
}

fn return_row(rows: &Mutex<Vec<Option<SweepRow>>>, row: SweepRow) {
    let idx = row.index;
    rows.lock().unwrap()[idx] = Some(row);
}

/// Render sweep rows as the summary CSV (deterministic bytes).
pub fn sweep_summary_csv(key: &str, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "index,{key},transmission_1,transmission_2,v_g_measured_1,potential_peak_gamma,status\n"
    ));
    for r in rows {
        let t1 = r.transmission.first().map(|v| v.to_string()).unwrap_or_default();
        let t2 = r.transmission.get(1).map(|v| v.to_string()).unwrap_or_default();
        let vg = r.v_g_measured.map(|v| v.to_string()).unwrap_or_default();
        let pk = if r.potential_peak_gamma.is_nan() {
            String::new()
        } else {
            r.potential_peak_gamma.to_string()
        };
        s.push_str(&format!("{},{},{t1},{t2},{vg},{pk},{}\n", r.index, r.value, r.status));
    }
    s
}

fn cmd_run(args: &RunArgs) -> i32 {
    let mut raw = match io::parse_config(&args.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for_io_error(&e);
        }
    };
    if let Some(b) = &args.backend {
        raw.run.backend = match b.as_str() {
            "quasistatic" => Backend::Quasistatic,
            "mol" => Backend::Mol,
            other => {
                eprintln!("error: unknown backend '{other}'");
                return 1;
            }
        };
    }
    if let Some(v) = &args.variant {
        raw.run.variant = match v.as_str() {
            "full" => ModelVariant::Full,
            "constantv" => ModelVariant::ConstantV,
            "meanfield" => ModelVariant::MeanField,
            "adiabatic" => ModelVariant::Adiabatic,
            "blockade" => ModelVariant::Blockade,
            other => {
                eprintln!("error: unknown variant '{other}'");
                return 1;
            }
        };
    }
    if let Some(v0) = args.v0 {
        raw.run.v0 = Some(v0);
    }
    if args.blockade_radius.is_some() || args.blockade_v.is_some() {
        let prev = raw.run.blockade;
        raw.run.blockade = Some(BlockadeParams {
            radius: args
                .blockade_radius
                .or(prev.map(|b| b.radius))
                .unwrap_or(0.0),
            v_in: args.blockade_v.or(prev.map(|b| b.v_in)).unwrap_or(0.0),
        });
    }
    if let Some(c_eff) = args.c_eff {
        raw.run.c_eff = Some(c_eff);
    }
    let cfg = match config::validate_config(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let result = match propagation::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for_run_error(&e);
        }
    };
    if let Err(e) = io::write_result(&result, &args.out, args.full) {
        eprintln!("error: {e}");
        return exit_code_for_io_error(&e);
    }
    for (l, t) in result.diagnostics.transmission.iter().enumerate() {
        println!("pulse {} transmission {t:.6}", l + 1);
    }
    println!(
        "potential peak {:.4} γ; wall {:.2} s; outputs in {}",
        result.diagnostics.potential_peak_gamma,
        result.diagnostics.wall_seconds,
        args.out.display()
    );
    0
}

fn cmd_chi(args: &ChiArgs) -> i32 {
    let deltas = match parse_range(&args.sweep) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if args.gamma <= 0.0 {
        eprintln!("error: non-positive rate: gamma");
        return 1;
    }
    let params = analysis::ChiParams {
        gamma: args.gamma,
        gamma_r: args.gammar,
        delta_p: args.deltap,
        omega_c: args.omegac,
        v0: args.v0,
    };
    let mut csv = String::from("delta_rad_per_us,re_chi_norm,im_chi_norm,slope_norm\n");
    for d in deltas {
        let chi = analysis::susceptibility_normalized(d, &params);
        let slope = analysis::dispersion_slope(&params, d) * args.gamma;
        csv.push_str(&format!("{d},{},{},{slope}\n", chi.re, chi.im));
    }
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                eprintln!("error: io: {e}");
                return 3;
            }
        }
        None => print!("{csv}"),
    }
    0
}

fn cmd_sweep(args: &SweepArgs) -> i32 {
    let raw = match io::parse_config(&args.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for_io_error(&e);
        }
    };
    let (key, range) = match args.vary.split_once('=') {
        Some(kv) => kv,
        None => {
            eprintln!("error: --vary must be key=lo:hi:n");
            return 1;
        }
    };
    let values = match parse_range(range) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: io: {e}");
        return 3;
    }
    let per_run_dir = args.keep_runs.then_some(args.out.as_path());
    let rows = match sweep_orchestrate(&raw, key, &values, args.jobs, per_run_dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let csv = sweep_summary_csv(key, &rows);
    if let Err(e) = std::fs::write(args.out.join("summary.csv"), &csv) {
        eprintln!("error: io: {e}");
        return 3;
    }
    print!("{csv}");
    if rows.iter().any(|r| r.status != "ok") {
        eprintln!("error: one or more sweep rows failed");
        return 2;
    }
    0
}

fn cmd_compare(args: &CompareArgs) -> i32 {
    match io::compare_run_dirs(&args.a, &args.b) {
        Ok(dist) => {
            println!("max relative L2 distance {dist:.3e} (tolerance {:.3e})", args.tol);
            if dist <= args.tol {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for_io_error(&e)
        }
    }
}

fn cmd_presets(args: &PresetsArgs) -> i32 {
    match args.action.as_str() {
        "list" => {
            for name in config::PRESET_NAMES {
                println!("{name}");
            }
            0
        }
        "emit" => {
            let Some(name) = &args.name else {
                eprintln!("error: presets emit requires a name");
                return 1;
            };
            let Some(text) = config::preset_json(name) else {
                eprintln!("error: unknown preset '{name}'");
                return 1;
            };
            match &args.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: io: {e}");
                        return 3;
                    }
                    0
                }
                None => {
                    print!("{text}");
                    0
                }
            }
        }
        other => {
            eprintln!("error: unknown presets action '{other}' (list | emit)");
            1
        }
    }
}

/// Parse argv and dispatch; returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are successes; usage errors are not.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Chi(a) => cmd_chi(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Presets(a) => cmd_presets(a),
    }
}
