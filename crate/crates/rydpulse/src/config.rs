//! Configuration records, validation, and shipped scenario presets.
//!
//! Config files are JSON with five sections: `medium`, `pulses`, `control`,
//! `grid`, `run`. All rates are angular (rad/µs) except the vdW coefficient,
//! which may be given in caption units (`c6_ghz_um6`, GHz·µm⁶) together with
//! a `c6_angular` switch stating whether that number is already an angular
//! frequency; the default treats it as an ordinary frequency and multiplies
//! by 2π on load.

// Validation guards use `!(x > 0.0)` so that NaN is rejected along with
// non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};


use crate::model::{
    ControlSchedule, EntrySide, Geometry, Grid, MediumSpec, ModelError, PulseSpec,
};
use crate::potential::{ConvMethod, NormMode};
use crate::{SPEED_OF_LIGHT, TWO_PI};

/// Solver backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Slow-light quasistatic scheme: the light field obeys a purely spatial
    /// transport equation at each instant.
    Quasistatic,
    /// Method-of-lines reference with a reduced effective light speed.
    Mol,
}

/// Which set of dynamical equations the run evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Coupled field equations plus the nonlocal effective potential built
    /// from the free reference spinwaves.
    Full,
    /// Externally imposed constant potential V⁰.
    ConstantV,
    /// Gross-Pitaevskii-style potential built from the interacting spinwaves.
    MeanField,
    /// Adiabatic elimination of the polarization field (primed fields with
    /// scale transformations).
    Adiabatic,
    /// Step potential switched by the inter-pulse peak separation.
    Blockade,
}

/// Blockade-variant parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadeParams {
    /// Blockade radius, µm.
    pub radius: f64,
    /// Potential applied inside the radius, rad/µs.
    pub v_in: f64,
}

/// Raw `medium` section as parsed from JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawMedium {
    pub gamma: f64,
    pub gamma_r: f64,
    pub coupling_g: f64,
    /// vdW coefficient directly in rad·µm⁶/µs. Mutually exclusive with
    /// `c6_ghz_um6`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c6: Option<f64>,
    /// vdW coefficient in caption units, GHz·µm⁶.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c6_ghz_um6: Option<f64>,
    /// Whether `c6_ghz_um6` is already an angular frequency. When false
    /// (default) the value is multiplied by 2π on load.
    #[serde(default)]
    pub c6_angular: bool,
    pub length: f64,
    pub separation: f64,
    pub diameter: f64,
    pub density: f64,
    pub geometry: Geometry,
}

/// Raw `pulses` entries.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawPulse {
    pub omega_p_max: f64,
    pub t_peak: f64,
    pub tau_p: f64,
    pub delta_p: f64,
    #[serde(default)]
    pub delta_two: f64,
    pub entry_side: EntrySide,
}

/// Raw `grid` section. `n_z` defaults to round(L/dz).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub dz: f64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_z: Option<usize>,
    pub n_t: usize,
    #[serde(default = "one")]
    pub downsample_z: usize,
    #[serde(default = "one")]
    pub downsample_t: usize,
}

fn one() -> usize {
    1
}

fn default_stride() -> usize {
    1
}

/// Raw `run` section.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawRun {
    pub variant: ModelVariant,
    pub backend: Backend,
    #[serde(default = "default_norm_mode")]
    pub norm_mode: NormMode,
    #[serde(default = "default_conv")]
    pub conv: ConvMethod,
    /// Refresh the potential every this many steps.
    #[serde(default = "default_stride")]
    pub potential_stride: usize,
    /// Constant potential V⁰ for the constant_v variant, rad/µs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blockade: Option<BlockadeParams>,
    /// Reduced light speed for the method-of-lines backend, µm/µs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_eff: Option<f64>,
}

fn default_norm_mode() -> NormMode {
    NormMode::Raw
}

fn default_conv() -> ConvMethod {
    ConvMethod::Fft
}

/// A parsed configuration record, before validation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub medium: RawMedium,
    pub pulses: Vec<RawPulse>,
    pub control: ControlSchedule,
    pub grid: RawGrid,
    pub run: RawRun,
}

/// Run settings after validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub variant: ModelVariant,
    pub backend: Backend,
    pub norm_mode: NormMode,
    pub conv: ConvMethod,
    pub potential_stride: usize,
    pub v0: Option<f64>,
    pub blockade: Option<BlockadeParams>,
    pub c_eff: Option<f64>,
}

/// A validated, solver-ready configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub medium: MediumSpec,
    pub pulses: Vec<PulseSpec>,
    pub control: ControlSchedule,
    pub grid: Grid,
    pub settings: RunSettings,
}

impl SimConfig {
    /// Nominal group velocity under the control plateau, µm/µs.
    pub fn nominal_group_velocity(&self) -> f64 {
        self.medium.nominal_group_velocity(self.control.omega_c0())
    }

    /// Slow-light ratio G²/max_t Ω_c(t)².
    pub fn slow_light_ratio(&self) -> f64 {
        self.medium.slow_light_ratio(self.control.omega_c0())
    }

    /// Echo back into a raw record (used by the run manifest; validating the
    /// echo reproduces the same specs).
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            medium: RawMedium {
                gamma: self.medium.gamma,
                gamma_r: self.medium.gamma_r,
                coupling_g: self.medium.coupling_g,
                c6: Some(self.medium.c6),
                c6_ghz_um6: None,
                c6_angular: false,
                length: self.medium.length,
                separation: self.medium.separation,
                diameter: self.medium.diameter,
                density: self.medium.density,
                geometry: self.medium.geometry,
            },
            pulses: self
                .pulses
                .iter()
                .map(|p| RawPulse {
                    omega_p_max: p.omega_p_max,
                    t_peak: p.t_peak,
                    tau_p: p.tau_p,
                    delta_p: p.delta_p,
                    delta_two: p.delta_two,
                    entry_side: p.entry_side,
                })
                .collect(),
            control: self.control.clone(),
            grid: RawGrid {
                dz: self.grid.dz,
                dt: self.grid.dt,
                n_z: Some(self.grid.n_z),
                n_t: self.grid.n_t,
                downsample_z: self.grid.downsample_z,
                downsample_t: self.grid.downsample_t,
            },
            run: RawRun {
                variant: self.settings.variant,
                backend: self.settings.backend,
                norm_mode: self.settings.norm_mode,
                conv: self.settings.conv,
                potential_stride: self.settings.potential_stride,
                v0: self.settings.v0,
                blockade: self.settings.blockade,
                c_eff: self.settings.c_eff,
            },
        }
    }
}

fn require_positive(name: &str, v: f64) -> Result<(), ModelError> {
    if !(v > 0.0) {
        return Err(ModelError::NonPositiveRate(format!("{name} = {v}")));
    }
    Ok(())
}

/// Validate a raw configuration record into solver-ready specs.
///
/// Checks every type invariant: positivity of rates and lengths, geometry /
/// entry-side consistency, grid-medium agreement, the slow-light condition
/// for the quasistatic backend, and the CFL bound for the method-of-lines
/// backend.
pub fn validate_config(raw: &RawConfig) -> Result<SimConfig, ModelError> {
    let m = &raw.medium;
    require_positive("gamma", m.gamma)?;
    if m.gamma_r < 0.0 {
        return Err(ModelError::NonPositiveRate(format!("gamma_r = {}", m.gamma_r)));
    }
    require_positive("coupling_g", m.coupling_g)?;
    if !(m.length > 0.0) {
        return Err(ModelError::NonPositiveLength(format!("length = {}", m.length)));
    }
    if m.separation < 0.0 {
        return Err(ModelError::NonPositiveLength(format!("separation = {}", m.separation)));
    }
    if !(m.diameter > 0.0) {
        return Err(ModelError::NonPositiveLength(format!("diameter = {}", m.diameter)));
    }

    let c6 = match (m.c6, m.c6_ghz_um6) {
        (Some(direct), None) => direct,
        (None, Some(caption)) => {
            // GHz·µm⁶ → rad·µm⁶/µs: ×10³ for MHz, ×2π unless already angular.
            let base = caption * 1e3;
            if m.c6_angular {
                base
            } else {
                base * TWO_PI
            }
        }
        (None, None) => return Err(ModelError::MissingField("medium.c6".into())),
        (Some(_), Some(_)) => {
            return Err(ModelError::Invalid(
                "medium.c6 and medium.c6_ghz_um6 are mutually exclusive".into(),
            ))
        }
    };

    let medium = MediumSpec {
        gamma: m.gamma,
        gamma_r: m.gamma_r,
        coupling_g: m.coupling_g,
        c6,
        length: m.length,
        separation: m.separation,
        diameter: m.diameter,
        density: m.density,
        geometry: m.geometry,
    };

    if raw.pulses.is_empty() || raw.pulses.len() > 2 {
        return Err(ModelError::Invalid(format!(
            "expected 1 or 2 pulses, got {}",
            raw.pulses.len()
        )));
    }
    let mut pulses = Vec::new();
    for (i, p) in raw.pulses.iter().enumerate() {
        if !(p.tau_p > 0.0) {
            return Err(ModelError::NonPositiveDuration(p.tau_p));
        }
        if p.omega_p_max.abs() == 0.0 {
            return Err(ModelError::NonPositiveRate(format!("pulses[{i}].omega_p_max = 0")));
        }
        pulses.push(PulseSpec {
            omega_p_max: p.omega_p_max,
            t_peak: p.t_peak,
            tau_p: p.tau_p,
            delta_p: p.delta_p,
            delta_two: p.delta_two,
            entry_side: p.entry_side,
        });
    }
    if pulses.len() == 2 {
        let same = pulses[0].entry_side == pulses[1].entry_side;
        match medium.geometry {
            Geometry::Counter if same => return Err(ModelError::CounterSameEntry),
            Geometry::Co if !same => return Err(ModelError::CoOppositeEntry),
            _ => {}
        }
    }

    match raw.control {
        ControlSchedule::Constant { omega_c0 } => require_positive("omega_c0", omega_c0)?,
        ControlSchedule::TanhSwitch { omega_c0, tau_c, .. } => {
            require_positive("omega_c0", omega_c0)?;
            require_positive("tau_c", tau_c)?;
        }
    }

    let g = &raw.grid;
    if !(g.dz > 0.0) {
        return Err(ModelError::NonPositiveLength(format!("dz = {}", g.dz)));
    }
    if !(g.dt > 0.0) {
        return Err(ModelError::NonPositiveRate(format!("dt = {}", g.dt)));
    }
    if g.downsample_z == 0 || g.downsample_t == 0 {
        return Err(ModelError::Invalid("downsample factors must be ≥ 1".into()));
    }
    let n_z = g.n_z.unwrap_or_else(|| (medium.length / g.dz).round() as usize);
    let span = n_z as f64 * g.dz;
    if (span - medium.length).abs() > 0.5 * g.dz {
        return Err(ModelError::GridLengthMismatch { got: span, want: medium.length });
    }
    let grid = Grid {
        dz: g.dz,
        dt: g.dt,
        n_z,
        n_t: g.n_t,
        downsample_z: g.downsample_z,
        downsample_t: g.downsample_t,
    };

    let r = &raw.run;
    if r.potential_stride == 0 {
        return Err(ModelError::Invalid("potential_stride must be ≥ 1".into()));
    }
    match r.backend {
        Backend::Quasistatic => {
            let ratio = medium.slow_light_ratio(raw.control.omega_c0());
            if ratio < 100.0 {
                return Err(ModelError::SlowLightViolated { ratio });
            }
        }
        Backend::Mol => {
            let c_eff = r.c_eff.ok_or_else(|| ModelError::MissingField("run.c_eff".into()))?;
            require_positive("c_eff", c_eff)?;
            if medium.length > 50.0 {
                return Err(ModelError::Invalid(format!(
                    "method-of-lines backend is a toy-scale reference (L ≤ 50 µm), got L = {}",
                    medium.length
                )));
            }
            let limit = 0.5 * grid.dz / c_eff;
            if grid.dt > limit {
                return Err(ModelError::CflViolation { dt: grid.dt, limit });
            }
        }
    }
    match r.variant {
        ModelVariant::ConstantV => {
            if r.v0.is_none() {
                return Err(ModelError::MissingField("run.v0 (constant_v variant)".into()));
            }
        }
        ModelVariant::Blockade => {
            if r.blockade.is_none() {
                return Err(ModelError::MissingField(
                    "run.blockade {radius, v_in} (blockade variant)".into(),
                ));
            }
        }
        ModelVariant::Adiabatic => {
            // P is eliminated by dividing by (γ + iΔp).
            for p in &pulses {
                if medium.gamma == 0.0 && p.delta_p == 0.0 {
                    return Err(ModelError::Invalid(
                        "adiabatic variant: gamma and delta_p both zero divides by zero".into(),
                    ));
                }
            }
        }
        _ => {}
    }

    Ok(SimConfig {
        medium,
        pulses,
        control: raw.control.clone(),
        grid,
        settings: RunSettings {
            variant: r.variant,
            backend: r.backend,
            norm_mode: r.norm_mode,
            conv: r.conv,
            potential_stride: r.potential_stride,
            v0: r.v0,
            blockade: r.blockade,
            c_eff: r.c_eff,
        },
    })
}

/// Shipped scenario presets, compiled into the library.
pub const PRESET_NAMES: [&str; 10] = [
    "fig2_red",
    "fig2_blue",
    "fig3_red",
    "fig3_blue",
    "fig4_single",
    "fig4_pair",
    "fig5_storage",
    "fig5_copropagate",
    "figS2_meanfield",
    "figS3_adiabatic",
];

/// JSON text of a shipped preset.
pub fn preset_json(name: &str) -> Option<&'static str> {
    match name {
        "fig2_red" => Some(include_str!("../presets/fig2_red.json")),
        "fig2_blue" => Some(include_str!("../presets/fig2_blue.json")),
        "fig3_red" => Some(include_str!("../presets/fig3_red.json")),
        "fig3_blue" => Some(include_str!("../presets/fig3_blue.json")),
        "fig4_single" => Some(include_str!("../presets/fig4_single.json")),
        "fig4_pair" => Some(include_str!("../presets/fig4_pair.json")),
        "fig5_storage" => Some(include_str!("../presets/fig5_storage.json")),
        "fig5_copropagate" => Some(include_str!("../presets/fig5_copropagate.json")),
        "figS2_meanfield" => Some(include_str!("../presets/figS2_meanfield.json")),
        "figS3_adiabatic" => Some(include_str!("../presets/figS3_adiabatic.json")),
        _ => None,
    }
}

/// Parse and validate a shipped preset.
pub fn preset(name: &str) -> Option<SimConfig> {
    let text = preset_json(name)?;
    let raw: RawConfig = serde_json::from_str(text).expect("shipped preset must parse");
    Some(validate_config(&raw).expect("shipped preset must validate"))
}

/// Derived quantities echoed into manifests.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DerivedQuantities {
    pub v_g_nominal_um_per_us: f64,
    pub slow_light_ratio: f64,
    /// Speed of light used, µm/µs.
    pub c_um_per_us: f64,
    /// Total input norm c·∫|Ω_p|²dt per pulse.
    pub input_norms: Vec<f64>,
}

impl DerivedQuantities {
    pub fn from_config(cfg: &SimConfig) -> Self {
        DerivedQuantities {
            v_g_nominal_um_per_us: cfg.nominal_group_velocity(),
            slow_light_ratio: cfg.slow_light_ratio(),
            c_um_per_us: SPEED_OF_LIGHT,
            input_norms: cfg.pulses.iter().map(|p| p.input_norm()).collect(),
        }
    }
}
