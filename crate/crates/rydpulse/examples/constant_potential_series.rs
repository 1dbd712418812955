//! Constant-potential model: sweep V⁰ for red- and blue-detuned pulses.
//!
//! Reproduces the qualitative series at reduced scale: the blue-detuned
//! pulse develops a deep transmission minimum at an intermediate V⁰ (the
//! potential parks it on the Raman absorption resonance) and recovers toward
//! two-level behavior at large V⁰, while the red-detuned pulse only speeds
//! up. Uses the sweep orchestrator with a two-worker pool.
//!
//! ```bash
//! cargo run --release --example constant_potential_series
//! ```

use rydpulse::cli::{sweep_orchestrate, sweep_summary_csv};
use rydpulse::config::preset;
use rydpulse::TWO_PI;

fn main() {
    let gamma = TWO_PI * 6.1;
    let values: Vec<f64> =
        [0.0, -1e-3, -3e-3, -6e-3, -2.5e-2, -1.0].iter().map(|v| v * gamma).collect();

    for name in ["fig3_red", "fig3_blue"] {
        // Reduced grid for a quick demonstration.
        let mut raw = preset(name).unwrap().to_raw();
        raw.grid.dz = 0.1;
        raw.grid.n_z = None;
        raw.grid.n_t = 35_000;
        raw.grid.dt = 0.002;
        for p in &mut raw.pulses {
            p.t_peak = 20.0;
            p.tau_p = 10.0;
        }
        let rows = sweep_orchestrate(&raw, "run.v0", &values, 2, None).expect("sweep");
        println!("--- {name} ---");
        print!("{}", sweep_summary_csv("run.v0", &rows));
    }
}
