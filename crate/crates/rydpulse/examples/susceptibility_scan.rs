//! Susceptibility, dispersion-slope, and group-velocity analytics.
//!
//! Sweeps the steady-state three-level response over the spectral axis for a
//! few constant interaction potentials, showing how an attractive potential
//! drags the medium from EIT toward an effective two-level system — fast and
//! transparent for red detuning, absorbing in the anomalous-dispersion
//! region for blue detuning.
//!
//! ```bash
//! cargo run --release --example susceptibility_scan
//! ```

use rydpulse::analysis::{dispersion_slope, group_velocity_analytic, susceptibility_normalized, ChiParams};
use rydpulse::TWO_PI;

fn main() {
    let gamma = TWO_PI * 6.1;
    let omega_c = TWO_PI * 1.5;
    let coupling_g = 1.0e5;

    for (label, delta_p) in [("red  (Δp = +10γ)", 10.0 * gamma), ("blue (Δp = −10γ)", -10.0 * gamma)] {
        println!("--- {label} ---");
        println!(
            "{:>12} {:>12} {:>12} {:>14} {:>14}",
            "V0/γ", "Re χγ(0)", "Im χγ(0)", "slope (µs²)", "v_g (µm/µs)"
        );
        for v0_gamma in [0.0, -1e-3, -3e-3, -6e-3, -2.5e-2, -1.0] {
            let p = ChiParams {
                gamma,
                gamma_r: TWO_PI * 1.8e-3,
                delta_p,
                omega_c,
                v0: v0_gamma * gamma,
            };
            let chi = susceptibility_normalized(0.0, &p);
            let slope = dispersion_slope(&p, 0.0);
            let vg = group_velocity_analytic(&p, coupling_g, 0.0);
            println!(
                "{v0_gamma:>12.4} {:>12.5} {:>12.5} {slope:>14.5e} {vg:>14.3}",
                chi.re, chi.im
            );
        }
    }

    // The central-component absorption peak for blue detuning sits where the
    // potential parks the pulse on the Raman resonance.
    let gammas = [-0.010, -0.008, -0.006, -0.004, -0.002];
    println!("--- blue absorption vs V0 (Δp = −10γ) ---");
    for v0_gamma in gammas {
        let p = ChiParams {
            gamma,
            gamma_r: TWO_PI * 1.8e-3,
            delta_p: -10.0 * gamma,
            omega_c,
            v0: v0_gamma * gamma,
        };
        let im = susceptibility_normalized(0.0, &p).im;
        let bar = "#".repeat((im * 60.0).min(70.0) as usize);
        println!("V0 = {v0_gamma:>7.4} γ  Im χγ = {im:>9.5} {bar}");
    }
}
