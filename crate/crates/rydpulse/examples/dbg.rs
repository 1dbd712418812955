use rydpulse::analysis::{self, FieldSelector};
use rydpulse::config::{preset, validate_config, ModelVariant};
use rydpulse::propagation::{run, scenario_storage, SimulationResult};
use std::time::Instant;

fn accel_ratio(result: &SimulationResult) -> f64 {
    let span = (result.config.grid.n_z - 1) as f64 * result.config.grid.dz;
    let tr1 = analysis::trajectory(result, FieldSelector::Light, 0);
    let tr2 = analysis::trajectory(result, FieldSelector::Light, 1);
    let peaks = |pulse: usize| -> Vec<f64> {
        let m = &result.pulses[pulse].e_mag;
        (0..m.n_rows)
            .map(|r| m.row(r).iter().cloned().fold(0.0_f64, f64::max))
            .collect()
    };
    let (pk1, pk2) = (peaks(0), peaks(1));
    let amp_ref = pk1.iter().cloned().fold(0.0_f64, f64::max);
    let intact = |k: usize| -> bool {
        tr1[k].valid && tr2[k].valid && pk1[k] >= 0.3 * amp_ref && pk2[k] >= 0.3 * amp_ref
    };
    // First contiguous intact stretch: the tracked life of the pulse pair.
    let mut start = None;
    let mut end = 0;
    for k in 0..tr1.len() {
        if intact(k) {
            if start.is_none() {
                start = Some(k);
            }
            end = k;
        } else if let Some(s) = start {
            if end - s >= 11 {
                break;
            }
            start = None;
        }
    }
    let Some(start) = start else { return f64::NAN };
    if end - start < 11 {
        return f64::NAN;
    }
    // Entry velocity: median over the interaction-free part of the stretch
    // (peaks still separated by ≥ 0.7 L).
    let mut entry: Vec<f64> = (start..=end)
        .filter(|&k| (tr1[k].z_physical - tr2[k].z_physical).abs() >= 0.7 * span)
        .map(|k| tr1[k].velocity)
        .collect();
    if entry.len() < 5 {
        return f64::NAN;
    }
    entry.sort_by(f64::total_cmp);
    let v_entry = entry[entry.len() / 2];
    // Velocity at the closest cleanly tracked approach: the approach-phase
    // velocity maximum of the stretch.
    let v_close =
        (start..=end).map(|k| tr1[k].velocity).fold(f64::NEG_INFINITY, f64::max);
    v_close / v_entry
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let g: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(9.0e4);
    let task = args.get(2).cloned().unwrap_or_else(|| "fig2".into());

    match task.as_str() {
        "fig2" => {
            for name in ["fig2_red", "fig2_blue"] {
                let mut raw = preset(name).unwrap().to_raw();
                raw.medium.coupling_g = g;
                let cfg = validate_config(&raw).unwrap();
                let t0 = Instant::now();
                match run(&cfg) {
                    Ok(r) => {
                        let t1 = analysis::transmission(&r, 0);
                        let acc = accel_ratio(&r);
                        println!(
                            "G={g:.3e} {name}: T={t1:.5} accel={acc:.2} vpeak={:.1}γ wall={:.0}s",
                            r.diagnostics.potential_peak_gamma,
                            t0.elapsed().as_secs_f64()
                        );
                    }
                    Err(e) => println!("G={g:.3e} {name}: ERROR {e}"),
                }
            }
        }
        "s3" => {
            for (variant, sign) in [
                (ModelVariant::Adiabatic, -1.0),
                (ModelVariant::Adiabatic, 1.0),
                (ModelVariant::Full, -1.0),
                (ModelVariant::Full, 1.0),
            ] {
                let mut raw = preset("figS3_adiabatic").unwrap().to_raw();
                raw.medium.coupling_g = g;
                raw.run.variant = variant;
                for p in &mut raw.pulses {
                    p.delta_p = sign * p.delta_p.abs();
                }
                let cfg = validate_config(&raw).unwrap();
                let t0 = Instant::now();
                match run(&cfg) {
                    Ok(r) => println!(
                        "G={g:.3e} s3 {variant:?} sign={sign}: T={:.5} wall={:.0}s",
                        analysis::transmission(&r, 0),
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("G={g:.3e} s3 {variant:?} sign={sign}: ERROR {e}"),
                }
            }
        }
        "fig5" => {
            let dt: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
            for a in [6.0, 7.0, 8.5, 10.0] {
                let mut raw = preset("fig5_storage").unwrap().to_raw();
                raw.medium.coupling_g = g;
                raw.medium.separation = a;
                let factor = (raw.grid.dt / dt).round() as usize;
                raw.grid.dt = dt;
                raw.grid.n_t *= factor.max(1);
                raw.grid.downsample_t *= factor.max(1);
                let cfg = validate_config(&raw).unwrap();
                let t0 = Instant::now();
                match scenario_storage(&cfg) {
                    Ok((r, rep)) => println!(
                        "G={g:.3e} fig5 a={a} dt={dt}: asym={:.4} storedNorm={:.3e} vpeak={:.1}γ wall={:.0}s",
                        rep.front_back_asymmetry[0],
                        rep.stored_norm.first().map(|(_, n)| n[0]).unwrap_or(0.0),
                        r.diagnostics.potential_peak_gamma,
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("G={g:.3e} fig5 a={a}: ERROR {e}"),
                }
            }
        }
        "s3diag" => {
            let mut raw = preset("figS3_adiabatic").unwrap().to_raw();
            raw.medium.coupling_g = g;
            raw.run.variant = ModelVariant::Full;
            let cfg = validate_config(&raw).unwrap();
            let r = run(&cfg).unwrap();
            let sc = &r.scalars.per_pulse[0];
            println!("vpeak={:.2}γ T={:?}", r.diagnostics.potential_peak_gamma, r.diagnostics.transmission);
            println!("t  vmax/γ  s_norm  influx  outflux  control");
            let gam = cfg.medium.gamma;
            for k in (0..sc.v_max.len()).step_by(2000) {
                println!(
                    "{:6.1} {:10.4e} {:10.4e} {:9.3e} {:9.3e} {:6.3}",
                    r.scalars.t[k], sc.v_max[k] / gam, sc.s_norm[k], sc.influx[k], sc.outflux[k],
                    r.scalars.control[k]
                );
            }
            // V profile and |S| profile rows near the approach.
            let h = &r.pulses[0];
            for want_t in [24.0, 30.0, 36.0, 39.0, 44.0, 50.0] {
                let row = r.times.iter().position(|t| *t >= want_t).unwrap_or(r.times.len() - 1);
                let vrow = h.v_re.row(row);
                let srow = h.s_mag.row(row);
                let erow = h.e_mag.row(row);
                let vmax = vrow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let vmin = vrow.iter().cloned().fold(f64::INFINITY, f64::min);
                let speak = srow.iter().cloned().fold(0.0_f64, f64::max);
                let epeak = erow.iter().cloned().fold(0.0_f64, f64::max);
                let s_arg = srow.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
                println!(
                    "t={:5.1}: V/γ in [{:9.3e},{:9.3e}]  |S|peak={:8.3e}@col{}  |E|peak={:8.3e}",
                    r.times[row], vmin / gam, vmax / gam, speak, s_arg, epeak
                );
            }
        }
        "s3t4" => {
            for (variant, sign) in [
                (ModelVariant::Adiabatic, -1.0),
                (ModelVariant::Adiabatic, 1.0),
                (ModelVariant::Full, -1.0),
                (ModelVariant::Full, 1.0),
            ] {
                let mut raw = preset("figS3_adiabatic").unwrap().to_raw();
                raw.medium.coupling_g = g;
                raw.run.variant = variant;
                for p in &mut raw.pulses {
                    p.delta_p = sign * p.delta_p.abs();
                    p.t_peak = 8.0;
                    p.tau_p = 4.0;
                }
                raw.grid.n_t = 70_000;
                let cfg = validate_config(&raw).unwrap();
                let t0 = Instant::now();
                match run(&cfg) {
                    Ok(r) => println!(
                        "G={g:.3e} s3t4 {variant:?} sign={sign}: T={:.5} vpeak={:.1}γ wall={:.0}s",
                        analysis::transmission(&r, 0),
                        r.diagnostics.potential_peak_gamma,
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("G={g:.3e} s3t4 {variant:?} sign={sign}: ERROR {e}"),
                }
            }
        }
        "fig5n" => {
            // Normalized storage asymmetry: interaction runs over a, plus a
            // c6 = 0 control at the same G.
            let control_asym = {
                let mut raw = preset("fig5_storage").unwrap().to_raw();
                raw.medium.coupling_g = g;
                raw.medium.c6 = Some(0.0);
                raw.medium.c6_ghz_um6 = None;
                let cfg = validate_config(&raw).unwrap();
                let (_, rep) = scenario_storage(&cfg).unwrap();
                rep.front_back_asymmetry[0]
            };
            println!("G={g:.3e} fig5n control(c6=0): asym={control_asym:.4}");
            for a in [6.0, 7.0, 8.5, 10.0] {
                let mut raw = preset("fig5_storage").unwrap().to_raw();
                raw.medium.coupling_g = g;
                raw.medium.separation = a;
                let cfg = validate_config(&raw).unwrap();
                let t0 = Instant::now();
                match scenario_storage(&cfg) {
                    Ok((r, rep)) => println!(
                        "G={g:.3e} fig5n a={a}: asym={:.4} normalized={:.4} vpeak={:.1}γ wall={:.0}s",
                        rep.front_back_asymmetry[0],
                        rep.front_back_asymmetry[0] / control_asym,
                        r.diagnostics.potential_peak_gamma,
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("G={g:.3e} fig5n a={a}: ERROR {e}"),
                }
            }
        }
        "traj" => {
            let mut raw = preset("fig2_red").unwrap().to_raw();
            raw.medium.coupling_g = g;
            let cfg = validate_config(&raw).unwrap();
            let r = run(&cfg).unwrap();
            println!("T={:?} vpeak={:.1}γ", r.diagnostics.transmission, r.diagnostics.potential_peak_gamma);
            let tr1 = analysis::trajectory(&r, FieldSelector::Light, 0);
            let tr2 = analysis::trajectory(&r, FieldSelector::Light, 1);
            let m = &r.pulses[0].e_mag;
            let peaks: Vec<f64> = (0..m.n_rows)
                .map(|row| m.row(row).iter().cloned().fold(0.0_f64, f64::max))
                .collect();
            println!("t   z1    z2    sep   v1     amp1   valid");
            for k in (0..tr1.len()).step_by(10) {
                let (a, b) = (&tr1[k], &tr2[k]);
                println!(
                    "{:6.2} {:7.2} {:7.2} {:7.2} {:9.2} {:9.3e} {}",
                    a.t,
                    a.z_physical,
                    b.z_physical,
                    (a.z_physical - b.z_physical).abs(),
                    a.velocity,
                    peaks[k],
                    a.valid && b.valid
                );
            }
        }
        "stab" => {
            // Splitting-gain stability probe: single EIT pulse, constant
            // control, varying theta = G^2 L dt / c via dt.
            for theta_target in [3.0, 5.0, 6.5, 8.0, 10.0, 13.0] {
                let coupling: f64 = 1.4e5;
                let length = 100.0;
                let dt = theta_target * rydpulse::SPEED_OF_LIGHT / (coupling * coupling * length);
                let mut raw = preset("fig2_red").unwrap().to_raw();
                raw.medium.coupling_g = coupling;
                raw.medium.c6 = Some(0.0);
                raw.medium.c6_ghz_um6 = None;
                raw.pulses.truncate(1);
                raw.grid.dt = dt;
                raw.grid.n_t = (40.0 / dt) as usize;
                raw.grid.downsample_t = 1000;
                let cfg = validate_config(&raw).unwrap();
                match run(&cfg) {
                    Ok(r) => println!(
                        "theta={theta_target:.1} dt={dt:.2e}: ok, T={:.4e}, maxdev={:.2e}",
                        analysis::transmission(&r, 0),
                        r.diagnostics.max_interacting_free_dev
                    ),
                    Err(e) => println!("theta={theta_target:.1} dt={dt:.2e}: {e}"),
                }
            }
        }
        other => eprintln!("unknown task {other}"),
    }
}
