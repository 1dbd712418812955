//! Pair-correlation estimate g²(τ) from a run snapshot.
//!
//! Runs a symmetric counter-propagating pair without interaction, stops the
//! clock while both pulses are mid-flight, and evaluates the unnormalized
//! correlation estimate built from the light-field profiles. Mirror
//! symmetry makes the curve even in τ.
//!
//! ```bash
//! cargo run --release --example pair_correlations
//! ```

use rydpulse::analysis;
use rydpulse::config::{preset, validate_config};
use rydpulse::propagation::run;

fn main() {
    let mut raw = preset("fig2_red").unwrap().to_raw();
    raw.medium.length = 40.0;
    raw.medium.c6 = Some(0.0);
    raw.medium.c6_ghz_um6 = None;
    raw.grid.n_z = None;
    raw.grid.n_t = 18_000; // stop mid-flight
    for p in &mut raw.pulses {
        p.t_peak = 3.0;
        p.tau_p = 1.0;
    }
    let cfg = validate_config(&raw).unwrap();
    let result = run(&cfg).expect("run");
    let v_g = result.derived.v_g_nominal_um_per_us;
    let taus: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.25).collect();
    let g2 = analysis::g2_estimate(&result, v_g, &taus);
    let peak = g2.iter().cloned().fold(0.0_f64, f64::max).max(1e-300);
    println!("g²(τ) on the t = {:.1} µs snapshot (v_g = {v_g:.2} µm/µs):", result.final_state.t);
    for (tau, val) in taus.iter().zip(&g2) {
        let bar = "#".repeat((val / peak * 50.0) as usize);
        println!("τ = {tau:>6.2} µs  {val:.3e}  {bar}");
    }
}
