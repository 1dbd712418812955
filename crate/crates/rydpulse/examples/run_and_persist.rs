//! Run a scenario, persist its outputs, and read the binary matrices back.
//!
//! Demonstrates the run directory layout: `manifest.json` (full config echo
//! plus derived quantities and diagnostics), self-describing `.rydf` field
//! matrices, and per-step scalar CSVs. The manifest alone re-validates into
//! the same solver configuration.
//!
//! ```bash
//! cargo run --release --example run_and_persist
//! ```

use rydpulse::config::{preset, validate_config};
use rydpulse::io::{self, RunManifest};
use rydpulse::propagation::run;

fn main() {
    let mut raw = preset("fig4_single").unwrap().to_raw();
    raw.medium.length = 40.0;
    raw.grid.n_z = None;
    raw.grid.n_t = 15_000;
    for p in &mut raw.pulses {
        p.t_peak = 4.0;
        p.tau_p = 2.0;
    }
    let cfg = validate_config(&raw).unwrap();
    let result = run(&cfg).expect("run");

    let out = std::env::temp_dir().join("rydpulse-example-run");
    io::write_result(&result, &out, false).expect("write outputs");
    println!("wrote run outputs to {}", out.display());

    let manifest: RunManifest = serde_json::from_str(
        &std::fs::read_to_string(out.join("manifest.json")).expect("manifest exists"),
    )
    .expect("manifest parses");
    let cfg_again = manifest.revalidate().expect("echoed config revalidates");
    assert_eq!(cfg, cfg_again);
    println!(
        "manifest round-trip ok; v_g nominal {:.2} µm/µs, slow-light ratio {:.2e}",
        manifest.derived.v_g_nominal_um_per_us, manifest.derived.slow_light_ratio
    );

    let m = io::read_field_matrix(&out.join("s_pulse1.rydf")).expect("matrix reads");
    println!(
        "|S| history: {} rows × {} cols, t ∈ [{:.2}, {:.2}] µs, z ∈ [{:.2}, {:.2}] µm",
        m.data.n_rows,
        m.data.n_cols,
        m.t_axis.first().unwrap(),
        m.t_axis.last().unwrap(),
        m.z_axis.first().unwrap(),
        m.z_axis.last().unwrap(),
    );
    let peak = m.data.data.iter().cloned().fold(0.0_f64, f64::max);
    println!("peak recorded |S| = {peak:.4} rad/µs");
}
