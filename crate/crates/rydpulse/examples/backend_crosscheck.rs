//! Quasistatic scheme versus the method-of-lines reference.
//!
//! A toy single-pulse EIT instance is run with both backends at matched
//! optical depth and group velocity (the method of lines carries the full
//! transport term at a reduced light speed under its CFL bound). The
//! spinwave histories are compared in relative L2.
//!
//! ```bash
//! cargo run --release --example backend_crosscheck
//! ```

use rydpulse::config::{preset, validate_config, Backend};
use rydpulse::model::{ControlSchedule, EntrySide, Geometry, Grid, MediumSpec, PulseSpec};
use rydpulse::propagation::{run, SimConfig};
use rydpulse::TWO_PI;

fn main() {
    let qs_cfg = SimConfig {
        medium: MediumSpec {
            gamma: TWO_PI * 6.1,
            gamma_r: TWO_PI * 1.8e-3,
            coupling_g: 1.154e5,
            c6: 0.0,
            length: 20.0,
            separation: 6.0,
            diameter: 2.0,
            density: 20.0,
            geometry: Geometry::Counter,
        },
        pulses: vec![PulseSpec {
            omega_p_max: TWO_PI * 0.01,
            t_peak: 5.0,
            tau_p: 2.0,
            delta_p: 0.0,
            delta_two: 0.0,
            entry_side: EntrySide::Left,
        }],
        control: ControlSchedule::Constant { omega_c0: TWO_PI * 1.5 },
        grid: Grid { dz: 0.04, dt: 1e-3, n_z: 500, n_t: 20_000, downsample_z: 5, downsample_t: 100 },
        settings: preset("fig2_red").unwrap().settings.clone(),
    };
    let mut mol_raw = qs_cfg.to_raw();
    mol_raw.run.backend = Backend::Mol;
    mol_raw.run.c_eff = Some(1000.0);
    mol_raw.grid.dt = 1e-5;
    mol_raw.grid.n_t = 2_000_000;
    mol_raw.grid.downsample_t = 10_000;
    let mol_cfg = validate_config(&mol_raw).unwrap();

    println!("running quasistatic backend ...");
    let qs = run(&qs_cfg).expect("quasistatic");
    println!("running method-of-lines reference (c_eff = 1000 µm/µs, CFL-limited dt) ...");
    let mol = run(&mol_cfg).expect("mol");

    let a = &qs.pulses[0].s_mag;
    let b = &mol.pulses[0].s_mag;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.data.iter().zip(&b.data) {
        num += (x - y) * (x - y);
        den += x * x;
    }
    println!(
        "relative L2 difference of |S(z,t)|: {:.4}  (quasistatic wall {:.1} s, mol wall {:.1} s)",
        (num / den).sqrt(),
        qs.diagnostics.wall_seconds,
        mol.diagnostics.wall_seconds,
    );
}
