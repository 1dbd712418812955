//! Time evolution engines.
//!
//! The default backend is the slow-light quasistatic scheme: each time step
//! (1) refreshes the interaction potential from the partner spinwave
//! density, (2) advances the atomic fields by RK4 with the light field
//! frozen, and (3) re-integrates the light field along z from the entry
//! boundary. A method-of-lines backend with a reduced light speed serves as
//! a brute-force cross-validation reference on toy instances, and the
//! adiabatic-elimination variant evolves primed fields that are converted
//! back through scale transformations for reporting.

mod adiabatic;
mod atoms;
mod mol;

pub use atoms::{
    apply_affine_step, exact_affine_step, step_atoms_auto, step_atoms_rk4, step_atoms_subcycled,
    substeps_for, uniform_affine_step, AffineStep, AtomRates, StageControl, RK4_THETA_MAX,
    RK4_THETA_QUIET,
    THETA_ABORT,
};

use std::time::Instant;

use num_complex::Complex64;
use thiserror::Error;

pub use crate::config::{Backend, ModelVariant, SimConfig};
use crate::config::DerivedQuantities;
use crate::model::{boundary_pulse, control_at, EntrySide, FieldState, ModelError};
use crate::potential::{
    mirror_into_physical, ConvMethod, ConvPlan, InteractionKernel, KernelError, NormMode,
};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("validation: {0}")]
    Model(#[from] ModelError),
    #[error("kernel: {0}")]
    Kernel(#[from] KernelError),
    #[error("divergence at t = {t:.4} µs: {detail}")]
    Divergence { t: f64, detail: String },
    #[error("NaN at t = {t:.4} µs in pulse {pulse} field {field}[{index}]")]
    Nan { t: f64, pulse: usize, field: &'static str, index: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Dense row-major matrix of recorded history values.
#[derive(Debug, Clone, PartialEq)]
pub struct Array2 {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl Array2 {
    pub fn new(n_cols: usize) -> Self {
        Array2 { n_rows: 0, n_cols, data: Vec::new() }
    }

    pub fn push_row(&mut self, row: impl Iterator<Item = f64>) {
        let before = self.data.len();
        self.data.extend(row);
        assert_eq!(self.data.len() - before, self.n_cols);
        self.n_rows += 1;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }
}

/// Downsampled space-time histories of one pulse, in its advection frame.
#[derive(Debug, Clone)]
pub struct PulseHistory {
    /// Sampled coordinates in the pulse's own frame (entry at 0), µm.
    pub z_frame: Vec<f64>,
    /// Physical coordinates of the same columns, µm.
    pub z_physical: Vec<f64>,
    pub e_mag: Array2,
    pub p_mag: Array2,
    pub s_mag: Array2,
    /// Real part of the interaction potential, rad/µs.
    pub v_re: Array2,
}

/// Per-step scalar diagnostics of one pulse.
#[derive(Debug, Clone, Default)]
pub struct PulseScalars {
    /// |E(entry, t)|².
    pub influx: Vec<f64>,
    /// |E(exit, t)|².
    pub outflux: Vec<f64>,
    /// ∫|S|²dz.
    pub s_norm: Vec<f64>,
    /// In-medium excitation norm of the free reference triplet, normalized
    /// by the pulse input norm (≈ surviving-photon probability).
    pub free_norm: Vec<f64>,
    /// max_z |V(z, t)|.
    pub v_max: Vec<f64>,
}

/// Scalar time series recorded at every step.
#[derive(Debug, Clone, Default)]
pub struct ScalarSeries {
    pub t: Vec<f64>,
    pub control: Vec<f64>,
    pub per_pulse: Vec<PulseScalars>,
}

/// End-of-run diagnostics summarized into the manifest.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Diagnostics {
    /// ∫|E(exit)|²dt / ∫|E(entry)|²dt per pulse.
    pub transmission: Vec<f64>,
    /// max over (z, t) of |V|, rad/µs, in the run's norm mode.
    pub potential_peak: f64,
    /// Same in units of γ.
    pub potential_peak_gamma: f64,
    /// Peak the other norm mode would have produced, in units of γ
    /// (the two modes differ by the constant input-norm factor).
    pub potential_peak_other_mode_gamma: Option<f64>,
    /// Minimum of the free-reference norm after the pulse has fully
    /// entered and before it starts leaving; absent when the pulse never
    /// fits fully inside the medium.
    pub free_norm_min_post_entry: Vec<Option<f64>>,
    /// max|S − S_free| / max|S_free| over the recorded history.
    pub max_interacting_free_dev: f64,
    /// Flux speed entering the norm bookkeeping: c (quasistatic) or c_eff.
    pub flux_speed: f64,
    /// Content hash of the interaction kernel, when one was built.
    pub kernel_hash: Option<String>,
    pub wall_seconds: f64,
    pub n_steps: usize,
    pub status: String,
}

/// Downsampled histories, diagnostics, and final state of one run.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub config: SimConfig,
    pub derived: DerivedQuantities,
    /// Times of the recorded history rows, µs.
    pub times: Vec<f64>,
    pub pulses: Vec<PulseHistory>,
    pub scalars: ScalarSeries,
    pub final_state: FieldState,
    /// Full-resolution states captured at requested times.
    pub snapshots: Vec<(f64, FieldState)>,
    pub diagnostics: Diagnostics,
}

/// Optional knobs for a run beyond the validated config.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Capture full-resolution state snapshots at these times.
    pub snapshot_times: Vec<f64>,
    /// Override the boundary drive: (pulse index, t) → complex amplitude.
    #[allow(clippy::type_complexity)]
    pub boundary: Option<&'a (dyn Fn(usize, f64) -> Complex64 + Sync)>,
}

/// Spatial integration of the quasistatic light field from the entry
/// boundary: c·∂z E = i·G·P discretized with the trapezoid rule in P.
pub fn integrate_field_quasistatic(
    e: &mut [Complex64],
    p: &[Complex64],
    boundary: Complex64,
    coupling_g: f64,
    dz: f64,
) {
    e[0] = boundary;
    let f = Complex64::new(0.0, coupling_g * dz / (2.0 * SPEED_OF_LIGHT));
    for j in 0..e.len() - 1 {
        e[j + 1] = e[j] + f * (p[j] + p[j + 1]);
    }
}

/// Interaction potential of one pulse at one instant, with the uniform case
/// kept symbolic so the stepper can use the cell-independent fast path.
#[derive(Debug, Clone)]
enum PotentialKind {
    Uniform(Complex64),
    Profile(Vec<Complex64>),
}

impl PotentialKind {
    fn max_abs(&self) -> f64 {
        match self {
            PotentialKind::Uniform(v) => v.norm(),
            PotentialKind::Profile(v) => {
                v.iter().map(|c| c.norm_sqr()).fold(0.0_f64, f64::max).sqrt()
            }
        }
    }

    fn sample_re(&self, indices: &[usize]) -> Vec<f64> {
        match self {
            PotentialKind::Uniform(v) => vec![v.re; indices.len()],
            PotentialKind::Profile(p) => indices.iter().map(|&j| p[j].re).collect(),
        }
    }
}

pub(crate) struct Engine<'a> {
    cfg: &'a SimConfig,
    opts: &'a RunOptions<'a>,
    kernel: Option<InteractionKernel>,
    plan: Option<ConvPlan>,
    /// Flux speed: c for quasistatic, c_eff for the method of lines.
    speed: f64,
    /// Coupling entering the dynamics: G, or G·√(c_eff/c) for MOL.
    coupling: f64,
    input_norms: Vec<f64>,
    state: FieldState,
    potentials: Vec<PotentialKind>,
    snapshot_times: Vec<f64>,
    // recording
    sampled_z: Vec<usize>,
    times: Vec<f64>,
    hist: Vec<PulseHistory>,
    scalars: ScalarSeries,
    snapshots: Vec<(f64, FieldState)>,
    snapshot_cursor: usize,
    max_boundary: f64,
    max_s_dev: f64,
    max_s_free: f64,
    potential_peak: f64,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, opts: &'a RunOptions<'a>) -> Result<Self, RunError> {
        let n_z = cfg.grid.n_z;
        let needs_kernel = matches!(
            cfg.settings.variant,
            ModelVariant::Full | ModelVariant::MeanField | ModelVariant::Adiabatic
        ) && cfg.pulses.len() == 2
            && cfg.medium.c6 != 0.0;
        let kernel =
            if needs_kernel { Some(InteractionKernel::build(&cfg.medium, &cfg.grid)?) } else { None };
        let plan = match (&kernel, cfg.settings.conv) {
            (Some(k), ConvMethod::Fft) => Some(ConvPlan::new(k)),
            _ => None,
        };
        let (speed, coupling) = match cfg.settings.backend {
            Backend::Quasistatic => (SPEED_OF_LIGHT, cfg.medium.coupling_g),
            Backend::Mol => {
                let c_eff = cfg.settings.c_eff.expect("validated");
                (c_eff, cfg.medium.coupling_g * (c_eff / SPEED_OF_LIGHT).sqrt())
            }
        };
        let input_norms: Vec<f64> = cfg
            .pulses
            .iter()
            .map(|p| {
                speed
                    * p.omega_p_max
                    * p.omega_p_max
                    * p.tau_p
                    * (std::f64::consts::PI / 2.0).sqrt()
            })
            .collect();
        let sampled_z = cfg.grid.sampled_z_indices();
        let hist = cfg
            .pulses
            .iter()
            .map(|p| {
                let z_frame: Vec<f64> =
                    sampled_z.iter().map(|&j| j as f64 * cfg.grid.dz).collect();
                let z_physical: Vec<f64> = sampled_z
                    .iter()
                    .map(|&j| frame_to_physical(j, n_z, cfg.grid.dz, p.entry_side))
                    .collect();
                let n_cols = sampled_z.len();
                PulseHistory {
                    z_frame,
                    z_physical,
                    e_mag: Array2::new(n_cols),
                    p_mag: Array2::new(n_cols),
                    s_mag: Array2::new(n_cols),
                    v_re: Array2::new(n_cols),
                }
            })
            .collect();
        let mut snapshot_times = opts.snapshot_times.clone();
        snapshot_times.sort_by(f64::total_cmp);
        Ok(Engine {
            cfg,
            opts,
            kernel,
            plan,
            speed,
            coupling,
            input_norms,
            state: FieldState::zeros(cfg.pulses.len(), n_z),
            potentials: vec![PotentialKind::Uniform(Complex64::new(0.0, 0.0)); cfg.pulses.len()],
            snapshot_times,
            sampled_z,
            times: Vec::new(),
            hist,
            scalars: ScalarSeries {
                t: Vec::new(),
                control: Vec::new(),
                per_pulse: vec![PulseScalars::default(); cfg.pulses.len()],
            },
            snapshots: Vec::new(),
            snapshot_cursor: 0,
            max_boundary: 0.0,
            max_s_dev: 0.0,
            max_s_free: 0.0,
            potential_peak: 0.0,
        })
    }

    /// Amplitude factor √(N·W)/G taking a Rabi-scaled profile back to the
    /// bare c-number spinwave whose squared magnitude is the physical 1-D
    /// density.
    fn raw_amplitude_scale(&self) -> f64 {
        let m = &self.cfg.medium;
        (m.density * crate::potential::transverse_mode_area(m.diameter)).sqrt() / self.coupling
    }

    fn boundary(&self, pulse: usize, t: f64) -> Complex64 {
        match self.opts.boundary {
            Some(f) => f(pulse, t),
            None => boundary_pulse(&self.cfg.pulses[pulse], t),
        }
    }

    fn refresh_potentials(&mut self, t: f64) -> Result<(), RunError> {
        let cfg = self.cfg;
        let n_pulses = cfg.pulses.len();
        match cfg.settings.variant {
            ModelVariant::ConstantV => {
                let v = Complex64::new(cfg.settings.v0.expect("validated"), 0.0);
                for p in self.potentials.iter_mut() {
                    *p = PotentialKind::Uniform(v);
                }
            }
            ModelVariant::Blockade => {
                let bl = cfg.settings.blockade.expect("validated");
                let v = if n_pulses == 2 {
                    let pos: Vec<Option<f64>> = (0..2)
                        .map(|l| {
                            peak_position(
                                &self.state.pulses[l].s,
                                cfg.grid.n_z,
                                cfg.grid.dz,
                                cfg.pulses[l].entry_side,
                            )
                        })
                        .collect();
                    match (pos[0], pos[1]) {
                        (Some(z1), Some(z2)) if (z1 - z2).abs() < bl.radius => {
                            Complex64::new(bl.v_in, 0.0)
                        }
                        _ => Complex64::new(0.0, 0.0),
                    }
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for p in self.potentials.iter_mut() {
                    *p = PotentialKind::Uniform(v);
                }
            }
            ModelVariant::Full | ModelVariant::MeanField | ModelVariant::Adiabatic => {
                if self.kernel.is_none() || n_pulses < 2 {
                    for p in self.potentials.iter_mut() {
                        *p = PotentialKind::Uniform(Complex64::new(0.0, 0.0));
                    }
                    return Ok(());
                }
                let kernel = self.kernel.as_ref().unwrap();
                let mean_field = cfg.settings.variant == ModelVariant::MeanField;
                for l in 0..2 {
                    let partner = 1 - l;
                    let source = if mean_field {
                        &self.state.pulses[partner].s
                    } else {
                        &self.state.pulses[partner].s_free
                    };
                    // Partner spinwave on physical coordinates, converted
                    // to the bare c-number amplitude in raw mode.
                    let mut source_phys =
                        mirror_into_physical(source, cfg.pulses[partner].entry_side);
                    if cfg.settings.norm_mode == NormMode::Raw {
                        let amp = self.raw_amplitude_scale();
                        for c in source_phys.iter_mut() {
                            *c *= amp;
                        }
                    }
                    let field = if mean_field {
                        crate::potential::mean_field_potential(
                            kernel,
                            &source_phys,
                            cfg.settings.norm_mode,
                            self.input_norms[partner],
                            self.plan.as_ref(),
                            t,
                        )?
                    } else {
                        crate::potential::effective_potential(
                            kernel,
                            &source_phys,
                            cfg.settings.norm_mode,
                            self.input_norms[partner],
                            self.plan.as_ref(),
                            t,
                        )?
                    };
                    // Back into the concerned pulse's frame.
                    let v_frame = mirror_into_physical(&field.values, cfg.pulses[l].entry_side);
                    self.potentials[l] = PotentialKind::Profile(v_frame);
                }
            }
        }
        Ok(())
    }

    fn rates_for(&self, pulse: usize) -> AtomRates {
        let p = &self.cfg.pulses[pulse];
        AtomRates {
            gamma: self.cfg.medium.gamma,
            gamma_r: self.cfg.medium.gamma_r,
            delta_p: p.delta_p,
            delta_two: p.delta_two,
            coupling_g: self.coupling,
        }
    }

    fn free_rates_for(&self, pulse: usize) -> AtomRates {
        AtomRates { delta_two: 0.0, ..self.rates_for(pulse) }
    }

    fn stiffness(&self, pulse: usize) -> f64 {
        let p = &self.cfg.pulses[pulse];
        let base = self.cfg.medium.gamma.hypot(p.delta_p)
            + self.cfg.control.omega_c0()
            + self.cfg.medium.gamma_r;
        base + p.delta_two.abs() + self.potentials[pulse].max_abs()
    }

    /// A potential rotating by more than [`THETA_ABORT`] radians per step
    /// cannot be resolved against the per-step potential refresh.
    fn check_stiffness(&self, pulse: usize) -> Result<(), RunError> {
        let theta = self.cfg.grid.dt * self.stiffness(pulse);
        if theta > THETA_ABORT {
            return Err(RunError::Divergence {
                t: self.state.t,
                detail: format!(
                    "potential magnitude {:.3e} rad/µs advances {theta:.1} rad per step; \
                     unresolvable against the potential refresh",
                    self.potentials[pulse].max_abs()
                ),
            });
        }
        Ok(())
    }

    fn record_scalars(&mut self, t: f64) {
        self.scalars.t.push(t);
        self.scalars.control.push(control_at(&self.cfg.control, t));
        let dz = self.cfg.grid.dz;
        for (l, fields) in self.state.pulses.iter().enumerate() {
            let sc = &mut self.scalars.per_pulse[l];
            sc.influx.push(fields.e[0].norm_sqr());
            sc.outflux.push(fields.e[fields.e.len() - 1].norm_sqr());
            sc.s_norm.push(fields.s.iter().map(|c| c.norm_sqr()).sum::<f64>() * dz);
            let free: f64 = fields
                .e_free
                .iter()
                .zip(&fields.p_free)
                .zip(&fields.s_free)
                .map(|((e, p), s)| e.norm_sqr() + p.norm_sqr() + s.norm_sqr())
                .sum::<f64>()
                * dz
                / self.input_norms[l];
            sc.free_norm.push(free);
            let vmax = self.potentials[l].max_abs();
            sc.v_max.push(vmax);
            self.potential_peak = self.potential_peak.max(vmax);
        }
    }

    fn record_row(&mut self, t: f64) -> Result<(), RunError> {
        for (l, fields) in self.state.pulses.iter().enumerate() {
            if let Some((field, index)) = fields.find_non_finite() {
                return Err(RunError::Nan { t, pulse: l, field, index });
            }
        }
        let limit = 1e6 * self.max_boundary.max(1e-300);
        for (l, fields) in self.state.pulses.iter().enumerate() {
            let m = fields.max_abs();
            if m > limit {
                return Err(RunError::Divergence {
                    t,
                    detail: format!(
                        "pulse {l} field magnitude {m:.3e} exceeds 1e6 × input maximum"
                    ),
                });
            }
        }
        self.times.push(t);
        for (l, fields) in self.state.pulses.iter().enumerate() {
            let h = &mut self.hist[l];
            h.e_mag.push_row(self.sampled_z.iter().map(|&j| fields.e[j].norm()));
            h.p_mag.push_row(self.sampled_z.iter().map(|&j| fields.p[j].norm()));
            h.s_mag.push_row(self.sampled_z.iter().map(|&j| fields.s[j].norm()));
            let vrow = self.potentials[l].sample_re(&self.sampled_z);
            h.v_re.push_row(vrow.into_iter());
            // interacting-vs-free deviation tracking
            let mut dev: f64 = 0.0;
            let mut sfree: f64 = 0.0;
            for (sj, s0j) in fields.s.iter().zip(&fields.s_free) {
                dev = dev.max((sj - s0j).norm_sqr());
                sfree = sfree.max(s0j.norm_sqr());
            }
            self.max_s_dev = self.max_s_dev.max(dev.sqrt());
            self.max_s_free = self.max_s_free.max(sfree.sqrt());
        }
        Ok(())
    }

    fn maybe_snapshot(&mut self, t: f64) {
        while self.snapshot_cursor < self.snapshot_times.len() {
            let want = self.snapshot_times[self.snapshot_cursor];
            if t + 1e-12 >= want {
                self.snapshots.push((t, self.state.clone()));
                self.snapshot_cursor += 1;
            } else {
                break;
            }
        }
    }

    /// Main loop for the quasistatic backend with unprimed fields.
    fn run_quasistatic(&mut self) -> Result<(), RunError> {
        let cfg = self.cfg;
        let grid = &cfg.grid;
        let n_pulses = cfg.pulses.len();

        // Initial field consistent with P ≡ 0: uniform boundary value.
        for l in 0..n_pulses {
            let b = self.boundary(l, 0.0);
            self.max_boundary = self.max_boundary.max(b.norm());
            self.state.pulses[l].e.fill(b);
            self.state.pulses[l].e_free.fill(b);
        }
        self.refresh_potentials(0.0)?;
        self.record_scalars(0.0);
        self.record_row(0.0)?;
        self.maybe_snapshot(0.0);

        for step in 0..grid.n_t {
            let t = step as f64 * grid.dt;
            if step % cfg.settings.potential_stride == 0 {
                self.refresh_potentials(t)?;
            }
            for l in 0..n_pulses {
                self.check_stiffness(l)?;
                let rates = self.rates_for(l);
                let free_rates = self.free_rates_for(l);
                let fields = &mut self.state.pulses[l];
                match &self.potentials[l] {
                    PotentialKind::Uniform(v) => {
                        let step_map = uniform_affine_step(&rates, *v, &cfg.control, t, grid.dt);
                        apply_affine_step(
                            &step_map,
                            &mut fields.p,
                            &mut fields.s,
                            &fields.e,
                            rates.coupling_g,
                        );
                    }
                    PotentialKind::Profile(v) => {
                        step_atoms_auto(
                            &mut fields.p,
                            &mut fields.s,
                            &fields.e,
                            v,
                            &rates,
                            &cfg.control,
                            t,
                            grid.dt,
                        );
                    }
                }
                let free_map = uniform_affine_step(
                    &free_rates,
                    Complex64::new(0.0, 0.0),
                    &cfg.control,
                    t,
                    grid.dt,
                );
                apply_affine_step(
                    &free_map,
                    &mut fields.p_free,
                    &mut fields.s_free,
                    &fields.e_free,
                    free_rates.coupling_g,
                );
            }
            let t_next = (step + 1) as f64 * grid.dt;
            for l in 0..n_pulses {
                let b = self.boundary(l, t_next);
                self.max_boundary = self.max_boundary.max(b.norm());
                let fields = &mut self.state.pulses[l];
                integrate_field_quasistatic(
                    &mut fields.e,
                    &fields.p,
                    b,
                    self.coupling,
                    grid.dz,
                );
                integrate_field_quasistatic(
                    &mut fields.e_free,
                    &fields.p_free,
                    b,
                    self.coupling,
                    grid.dz,
                );
            }
            self.state.t = t_next;
            self.record_scalars(t_next);
            if (step + 1) % grid.downsample_t == 0 || step + 1 == grid.n_t {
                self.record_row(t_next)?;
            }
            self.maybe_snapshot(t_next);
        }
        Ok(())
    }

    fn finish(mut self, wall: f64, status: &str) -> SimulationResult {
        let cfg = self.cfg;
        let dt = cfg.grid.dt;
        let mut transmission = Vec::new();
        for sc in &self.scalars.per_pulse {
            let integrate = |v: &[f64]| -> f64 {
                if v.len() < 2 {
                    return 0.0;
                }
                let mut acc = 0.5 * (v[0] + v[v.len() - 1]);
                acc += v[1..v.len() - 1].iter().sum::<f64>();
                acc * dt
            };
            let inn = integrate(&sc.influx);
            let out = integrate(&sc.outflux);
            transmission.push(if inn > 0.0 { out / inn } else { 0.0 });
        }
        let gamma = cfg.medium.gamma;
        // The two modes' densities differ by the constant factor
        // (N·W/G²)·(c∫|Ω_p|²dt): single-photon = raw / that factor.
        let raw_to_sp = {
            let a = self.raw_amplitude_scale();
            a * a * self.input_norms[0]
        };
        let other_mode = match (self.kernel.as_ref(), cfg.settings.norm_mode) {
            (Some(_), NormMode::SinglePhoton) => {
                Some(self.potential_peak * raw_to_sp / gamma)
            }
            (Some(_), NormMode::Raw) => Some(self.potential_peak / raw_to_sp / gamma),
            _ => None,
        };
        let mut free_norm_min = Vec::new();
        for (l, sc) in self.scalars.per_pulse.iter().enumerate() {
            let entry_done = cfg.pulses[l].t_peak + 2.0 * cfg.pulses[l].tau_p;
            // The transit window ends when the pulse starts leaving in
            // earnest: cumulative output flux reaching 0.1% of the total
            // input (a threshold on the instantaneous flux would trip on the
            // instant-fill transient of the quasistatic field).
            let total_in: f64 = sc.influx.iter().sum::<f64>() * dt;
            let mut cum_out = 0.0;
            let mut exit_onset = f64::INFINITY;
            for (t, &o) in self.scalars.t.iter().zip(&sc.outflux) {
                cum_out += o * dt;
                if cum_out > 1e-3 * total_in {
                    exit_onset = *t;
                    break;
                }
            }
            let min = self
                .scalars
                .t
                .iter()
                .zip(&sc.free_norm)
                .filter(|(t, _)| **t >= entry_done && **t <= exit_onset)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            free_norm_min.push(min.is_finite().then_some(min));
        }
        let diagnostics = Diagnostics {
            transmission,
            potential_peak: self.potential_peak,
            potential_peak_gamma: self.potential_peak / gamma,
            potential_peak_other_mode_gamma: other_mode,
            free_norm_min_post_entry: free_norm_min,
            max_interacting_free_dev: if self.max_s_free > 0.0 {
                self.max_s_dev / self.max_s_free
            } else {
                0.0
            },
            flux_speed: self.speed,
            kernel_hash: self.kernel.as_ref().map(|k| format!("{:016x}", k.content_hash)),
            wall_seconds: wall,
            n_steps: cfg.grid.n_t,
            status: status.to_string(),
        };
        SimulationResult {
            config: cfg.clone(),
            derived: DerivedQuantities::from_config(cfg),
            times: std::mem::take(&mut self.times),
            pulses: std::mem::take(&mut self.hist),
            scalars: std::mem::take(&mut self.scalars),
            final_state: self.state.clone(),
            snapshots: std::mem::take(&mut self.snapshots),
            diagnostics,
        }
    }
}

fn frame_to_physical(j: usize, n_z: usize, dz: f64, entry: EntrySide) -> f64 {
    match entry {
        EntrySide::Left => j as f64 * dz,
        EntrySide::Right => (n_z - 1 - j) as f64 * dz,
    }
}

/// Physical position of the spinwave magnitude peak, if the field is alive.
fn peak_position(s: &[Complex64], n_z: usize, dz: f64, entry: EntrySide) -> Option<f64> {
    let mut best = 0.0;
    let mut idx = None;
    for (j, c) in s.iter().enumerate() {
        let m = c.norm_sqr();
        if m > best {
            best = m;
            idx = Some(j);
        }
    }
    idx.filter(|_| best > 0.0).map(|j| frame_to_physical(j, n_z, dz, entry))
}

/// Run a validated configuration to completion.
pub fn run(cfg: &SimConfig) -> Result<SimulationResult, RunError> {
    run_with_options(cfg, &RunOptions::default())
}

/// Run with snapshots and/or a custom boundary drive.
pub fn run_with_options(
    cfg: &SimConfig,
    opts: &RunOptions<'_>,
) -> Result<SimulationResult, RunError> {
    let start = Instant::now();
    let mut engine = Engine::new(cfg, opts)?;
    match (cfg.settings.backend, cfg.settings.variant) {
        (Backend::Quasistatic, ModelVariant::Adiabatic) => {
            adiabatic::run_adiabatic_loop(&mut engine)?
        }
        (Backend::Quasistatic, _) => engine.run_quasistatic()?,
        (Backend::Mol, ModelVariant::Adiabatic) => {
            return Err(RunError::Unsupported(
                "adiabatic variant is only implemented on the quasistatic backend".into(),
            ))
        }
        (Backend::Mol, _) => mol::run_mol_loop(&mut engine)?,
    }
    let wall = start.elapsed().as_secs_f64();
    Ok(engine.finish(wall, "completed"))
}

/// Method-of-lines cross-validation reference; the config must request the
/// `mol` backend (validated CFL bound and toy scale).
pub fn run_mol_reference(cfg: &SimConfig) -> Result<SimulationResult, RunError> {
    if cfg.settings.backend != Backend::Mol {
        return Err(RunError::Unsupported("run_mol_reference requires backend = mol".into()));
    }
    run(cfg)
}

/// Adiabatic-elimination variant; the config must request it.
pub fn run_adiabatic(cfg: &SimConfig) -> Result<SimulationResult, RunError> {
    if cfg.settings.variant != ModelVariant::Adiabatic {
        return Err(RunError::Unsupported("run_adiabatic requires variant = adiabatic".into()));
    }
    run(cfg)
}

/// Stored-spinwave report of a pulse-stopping run.
#[derive(Debug, Clone)]
pub struct StorageReport {
    /// When the control reaches zero.
    pub switch_off_time: f64,
    /// When the stored profile was evaluated (first snapshot ≥ t_off + 1 µs).
    pub eval_time: f64,
    /// |S(ξ)| at full resolution per pulse at `eval_time`.
    pub stored_profiles: Vec<Vec<f64>>,
    /// Leading-half over trailing-half integrated |S|², split at the peak.
    pub front_back_asymmetry: Vec<f64>,
    /// (t, per-pulse ∫|S|²dz) for t ≥ eval_time.
    pub stored_norm: Vec<(f64, Vec<f64>)>,
}

/// Integrated |S|² ahead of the peak over behind the peak, in the pulse's
/// propagation direction.
pub fn front_back_asymmetry(profile_mag: &[f64]) -> f64 {
    let mut imax = 0;
    let mut best = 0.0;
    for (j, &m) in profile_mag.iter().enumerate() {
        if m > best {
            best = m;
            imax = j;
        }
    }
    if best == 0.0 {
        return f64::NAN;
    }
    let lead: f64 = profile_mag[imax + 1..].iter().map(|m| m * m).sum();
    let trail: f64 = profile_mag[..imax].iter().map(|m| m * m).sum();
    if trail > 0.0 {
        lead / trail
    } else {
        f64::INFINITY
    }
}

/// Run a pulse-stopping scenario and report the stored spinwave profile,
/// its front/back asymmetry, and its subsequent decay.
pub fn scenario_storage(cfg: &SimConfig) -> Result<(SimulationResult, StorageReport), RunError> {
    let t_off = cfg.control.switch_off_time().ok_or_else(|| {
        RunError::Unsupported("storage scenario requires a tanh_switch control schedule".into())
    })?;
    let eval = (t_off + 1.0).min(cfg.grid.t_end());
    let opts = RunOptions { snapshot_times: vec![eval], boundary: None };
    let result = run_with_options(cfg, &opts)?;
    let (eval_time, snap) = result
        .snapshots
        .first()
        .map(|(t, s)| (*t, s.clone()))
        .unwrap_or((result.final_state.t, result.final_state.clone()));
    let stored_profiles: Vec<Vec<f64>> =
        snap.pulses.iter().map(|p| p.s.iter().map(|c| c.norm()).collect()).collect();
    let front_back: Vec<f64> =
        stored_profiles.iter().map(|p| front_back_asymmetry(p)).collect();
    let mut stored_norm = Vec::new();
    for (i, &t) in result.scalars.t.iter().enumerate() {
        if t + 1e-12 >= eval_time {
            let norms: Vec<f64> =
                result.scalars.per_pulse.iter().map(|sc| sc.s_norm[i]).collect();
            stored_norm.push((t, norms));
        }
    }
    let report = StorageReport {
        switch_off_time: t_off,
        eval_time,
        stored_profiles,
        front_back_asymmetry: front_back,
        stored_norm,
    };
    Ok((result, report))
}

#[cfg(test)]
pub(crate) use adiabatic::rk4_scalar as adiabatic_rk4_scalar_for_tests;

#[cfg(test)]
mod tests;
