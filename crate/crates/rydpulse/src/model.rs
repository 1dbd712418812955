//! Domain types shared by all solvers: medium and pulse parameters, the
//! time-dependent control schedule, grids, and the per-instant field state.
//!
//! Everything here is an immutable value object after validation; types are
//! `Clone + Send + Sync` and never mutated in place by the solvers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

/// Relative propagation direction of the two pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Pulses enter opposite tips of the two ensembles and meet head-on.
    Counter,
    /// Pulses enter the same tip and travel together.
    Co,
}

/// Which tip of the ensemble a pulse enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntrySide {
    Left,
    Right,
}

/// Atomic ensemble and waveguide geometry parameters.
///
/// All rates are angular (rad/µs), lengths are µm. `c6` carries its sign:
/// negative means attraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    /// Intermediate-level decay rate γ, rad/µs.
    pub gamma: f64,
    /// Rydberg-level decay rate γ′, rad/µs.
    pub gamma_r: f64,
    /// Collective atom-field coupling G = g√N, rad/µs.
    pub coupling_g: f64,
    /// van der Waals coefficient C₆, rad·µm⁶/µs.
    pub c6: f64,
    /// Ensemble length L, µm.
    pub length: f64,
    /// Axis-to-axis waveguide separation a, µm.
    pub separation: f64,
    /// Waveguide diameter d, µm.
    pub diameter: f64,
    /// Atomic density N, µm⁻³. Metadata; the dynamics use `coupling_g`.
    pub density: f64,
    pub geometry: Geometry,
}

impl MediumSpec {
    /// Nominal slow-light group velocity c·Ω_c²/G², µm/µs.
    pub fn nominal_group_velocity(&self, omega_c: f64) -> f64 {
        SPEED_OF_LIGHT * omega_c * omega_c / (self.coupling_g * self.coupling_g)
    }

    /// Slow-light ratio G²/Ω_c², dimensionless.
    pub fn slow_light_ratio(&self, omega_c_max: f64) -> f64 {
        self.coupling_g * self.coupling_g / (omega_c_max * omega_c_max)
    }
}

/// Boundary-condition envelope of one photon pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Peak Rabi frequency of the pulse at entry, rad/µs.
    pub omega_p_max: f64,
    /// Envelope peak arrival time t_p, µs.
    pub t_peak: f64,
    /// Pulse duration τ_p, µs.
    pub tau_p: f64,
    /// One-photon detuning Δ_p, rad/µs. Sign meaningful.
    pub delta_p: f64,
    /// Two-photon detuning δ, rad/µs. 0 under the EIT condition.
    #[serde(default)]
    pub delta_two: f64,
    pub entry_side: EntrySide,
}

impl PulseSpec {
    /// Total input norm c·∫|Ω_p(t)|²dt of the full Gaussian envelope,
    /// evaluated in closed form. Used as the single-photon normalization of
    /// the interaction potential.
    pub fn input_norm(&self) -> f64 {
        SPEED_OF_LIGHT
            * self.omega_p_max
            * self.omega_p_max
            * self.tau_p
            * (std::f64::consts::PI / 2.0).sqrt()
    }
}

/// Gaussian on-axis boundary envelope Ω_p(t) = Ω_p^M·exp(−(t−t_p)²/τ_p²).
///
/// Real-valued in the rotating frame; returned as a complex amplitude since
/// solvers and custom drives work with complex boundary values.
pub fn boundary_pulse(spec: &PulseSpec, t: f64) -> Complex64 {
    let x = (t - spec.t_peak) / spec.tau_p;
    Complex64::new(spec.omega_p_max * (-x * x).exp(), 0.0)
}

/// Time-dependent control Rabi frequency Ω_c(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlSchedule {
    /// Constant plateau.
    Constant { omega_c0: f64 },
    /// Ω_c0·tanh((t_off − t)/τ_c), clamped at zero for t ≥ t_off.
    TanhSwitch { omega_c0: f64, t_off: f64, tau_c: f64 },
}

impl ControlSchedule {
    /// Plateau value Ω_c0, which is also max_t Ω_c(t).
    pub fn omega_c0(&self) -> f64 {
        match *self {
            ControlSchedule::Constant { omega_c0 } => omega_c0,
            ControlSchedule::TanhSwitch { omega_c0, .. } => omega_c0,
        }
    }

    /// Time at which the control reaches exactly zero, if it ever does.
    pub fn switch_off_time(&self) -> Option<f64> {
        match *self {
            ControlSchedule::Constant { .. } => None,
            ControlSchedule::TanhSwitch { t_off, .. } => Some(t_off),
        }
    }
}

/// Evaluate Ω_c(t). Non-negative and continuous for all t.
pub fn control_at(schedule: &ControlSchedule, t: f64) -> f64 {
    match *schedule {
        ControlSchedule::Constant { omega_c0 } => omega_c0,
        ControlSchedule::TanhSwitch { omega_c0, t_off, tau_c } => {
            omega_c0 * ((t_off - t) / tau_c).tanh().max(0.0)
        }
    }
}

/// Space-time discretization and output downsampling factors.
///
/// Grid points sit at z_j = j·dz for j = 0..n_z−1, so the grid spans
/// (n_z−1)·dz; validation requires |n_z·dz − L| ≤ dz/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Spatial step, µm.
    pub dz: f64,
    /// Time step, µs.
    pub dt: f64,
    /// Number of grid points along z.
    pub n_z: usize,
    /// Number of time steps; the run covers t ∈ [0, n_t·dt].
    pub n_t: usize,
    /// Keep every `downsample_z`-th grid point in recorded histories.
    pub downsample_z: usize,
    /// Record a history row every `downsample_t` steps.
    pub downsample_t: usize,
}

impl Grid {
    /// Physical coordinates of the grid points, µm.
    pub fn z_points(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| j as f64 * self.dz).collect()
    }

    /// End time of the run, µs.
    pub fn t_end(&self) -> f64 {
        self.n_t as f64 * self.dt
    }

    /// Indices of the downsampled z columns.
    pub fn sampled_z_indices(&self) -> Vec<usize> {
        (0..self.n_z).step_by(self.downsample_z).collect()
    }
}

/// The six complex field profiles of one pulse at one instant, on the
/// pulse's own advection frame (entry at index 0).
///
/// `e`, `p`, `s` are the interacting light, polarization, and spinwave
/// profiles; `e_free`, `p_free`, `s_free` are the freely evolving reference
/// profiles used to build the interaction potential.
#[derive(Debug, Clone)]
pub struct PulseFields {
    pub e: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub e_free: Vec<Complex64>,
    pub p_free: Vec<Complex64>,
    pub s_free: Vec<Complex64>,
}

impl PulseFields {
    pub fn zeros(n_z: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n_z];
        PulseFields {
            e: z.clone(),
            p: z.clone(),
            s: z.clone(),
            e_free: z.clone(),
            p_free: z.clone(),
            s_free: z,
        }
    }

    /// Index and name of the first non-finite value, if any.
    pub fn find_non_finite(&self) -> Option<(&'static str, usize)> {
        let scan = |name: &'static str, arr: &[Complex64]| {
            arr.iter()
                .position(|c| !c.re.is_finite() || !c.im.is_finite())
                .map(|j| (name, j))
        };
        scan("e", &self.e)
            .or_else(|| scan("p", &self.p))
            .or_else(|| scan("s", &self.s))
            .or_else(|| scan("e_free", &self.e_free))
            .or_else(|| scan("p_free", &self.p_free))
            .or_else(|| scan("s_free", &self.s_free))
    }

    /// Largest field magnitude across all six profiles.
    pub fn max_abs(&self) -> f64 {
        [&self.e, &self.p, &self.s, &self.e_free, &self.p_free, &self.s_free]
            .iter()
            .flat_map(|a| a.iter())
            .map(|c| c.norm_sqr())
            .fold(0.0_f64, f64::max)
            .sqrt()
    }
}

/// Full solver state at one instant: one [`PulseFields`] per active pulse.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub t: f64,
    pub pulses: Vec<PulseFields>,
}

impl FieldState {
    pub fn zeros(n_pulses: usize, n_z: usize) -> Self {
        FieldState {
            t: 0.0,
            pulses: (0..n_pulses).map(|_| PulseFields::zeros(n_z)).collect(),
        }
    }
}

/// Validation and configuration errors.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("non-positive rate: {0}")]
    NonPositiveRate(String),
    #[error("non-positive duration: tau_p = {0}")]
    NonPositiveDuration(f64),
    #[error("non-positive length: {0}")]
    NonPositiveLength(String),
    #[error(
        "slow-light condition violated: G²/Ω_c² = {ratio:.3} < 100 with quasistatic backend"
    )]
    SlowLightViolated { ratio: f64 },
    #[error("counter geometry requires opposite entry sides")]
    CounterSameEntry,
    #[error("co geometry requires the same entry side for both pulses")]
    CoOppositeEntry,
    #[error("grid does not span the medium: n_z·dz = {got:.4} vs L = {want:.4}")]
    GridLengthMismatch { got: f64, want: f64 },
    #[error("CFL violation: dt = {dt} exceeds {limit:.3e} = 0.5·dz/c_eff")]
    CflViolation { dt: f64, limit: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TWO_PI;

    fn fig2_pulse() -> PulseSpec {
        PulseSpec {
            omega_p_max: TWO_PI * 0.01,
            t_peak: 10.0,
            tau_p: 5.0,
            delta_p: 5.0 * TWO_PI * 6.1,
            delta_two: 0.0,
            entry_side: EntrySide::Left,
        }
    }

    #[test]
    fn control_constant() {
        let c = ControlSchedule::Constant { omega_c0: 3.0 };
        assert_eq!(control_at(&c, 0.0), 3.0);
        assert_eq!(control_at(&c, 123.0), 3.0);
    }

    #[test]
    fn control_tanh_far_before_switch() {
        let c = ControlSchedule::TanhSwitch { omega_c0: 2.5, t_off: 80.0, tau_c: 1.0 };
        let v = control_at(&c, 0.0);
        assert!((v - 2.5 * 80.0_f64.tanh()).abs() < 1e-15);
        assert!((v - 2.5).abs() < 1e-12, "tanh(80) is 1 to machine precision");
    }

    #[test]
    fn control_tanh_at_and_after_switch() {
        let c = ControlSchedule::TanhSwitch { omega_c0: 2.5, t_off: 80.0, tau_c: 1.0 };
        assert_eq!(control_at(&c, 80.0), 0.0);
        // tanh(-1) < 0 would re-couple with a π phase; clamped instead.
        assert_eq!(control_at(&c, 81.0), 0.0);
    }

    #[test]
    fn control_is_continuous_and_nonnegative() {
        let c = ControlSchedule::TanhSwitch { omega_c0: 1.0, t_off: 10.0, tau_c: 2.0 };
        let mut prev = control_at(&c, 0.0);
        for i in 1..=400 {
            let t = i as f64 * 0.05;
            let v = control_at(&c, t);
            assert!(v >= 0.0);
            assert!((v - prev).abs() < 0.05, "jump at t={t}");
            prev = v;
        }
    }

    #[test]
    fn boundary_peak_and_1_over_e() {
        let p = fig2_pulse();
        let at_peak = boundary_pulse(&p, p.t_peak);
        assert!((at_peak.re - p.omega_p_max).abs() < 1e-15);
        assert_eq!(at_peak.im, 0.0);
        let at_tau = boundary_pulse(&p, p.t_peak + p.tau_p);
        assert!((at_tau.re - p.omega_p_max / std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn boundary_fig2_value_at_t0() {
        // Ω_p^M·e⁻⁴ at t = 0 for t_p = 10, τ_p = 5.
        let p = fig2_pulse();
        let v = boundary_pulse(&p, 0.0).re;
        assert!((v - TWO_PI * 0.01 * (-4.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn boundary_and_control_are_deterministic() {
        let p = fig2_pulse();
        let c = ControlSchedule::TanhSwitch { omega_c0: 2.5, t_off: 80.0, tau_c: 1.0 };
        for i in 0..100 {
            let t = i as f64 * 0.77;
            assert_eq!(boundary_pulse(&p, t), boundary_pulse(&p, t));
            assert_eq!(control_at(&c, t), control_at(&c, t));
        }
    }

    #[test]
    fn input_norm_matches_quadrature() {
        let p = fig2_pulse();
        // Trapezoid over a wide window as an independent check.
        let dt = 1e-4;
        let mut sum = 0.0;
        let n = (60.0 / dt) as usize;
        for i in 0..=n {
            let t = -20.0 + i as f64 * dt;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            sum += w * boundary_pulse(&p, t).norm_sqr() * dt;
        }
        let expect = SPEED_OF_LIGHT * sum;
        assert!((p.input_norm() - expect).abs() / expect < 1e-8);
    }
}
