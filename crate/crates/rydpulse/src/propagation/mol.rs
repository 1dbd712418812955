//! Method-of-lines reference backend.
//!
//! Integrates the full transport equation ∂tE + c_eff·∂zE = i·G′·P with
//! first-order upwind differencing and RK4 over the joint (E, P, S) state,
//! at a reduced light speed c_eff with G′ = G·√(c_eff/c) so that optical
//! depth G′²/c_eff and group velocity are preserved. Toy-scale only; used to
//! cross-validate the quasistatic reduction.

use num_complex::Complex64;

use super::{Engine, PotentialKind, RunError};
use crate::model::control_at;
use crate::propagation::atoms::AtomRates;

struct Tri {
    e: Vec<Complex64>,
    p: Vec<Complex64>,
    s: Vec<Complex64>,
}

impl Tri {
    fn zeros(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Tri { e: z.clone(), p: z.clone(), s: z }
    }
}

#[allow(clippy::too_many_arguments)]
fn derivative(
    y: &Tri,
    v: &[Complex64],
    rates: &AtomRates,
    omega: f64,
    c_eff: f64,
    dz: f64,
    out: &mut Tri,
) {
    let n = y.e.len();
    let a = Complex64::new(-rates.gamma, -rates.delta_p);
    let iw = Complex64::new(0.0, omega);
    let ig = Complex64::new(0.0, rates.coupling_g);
    let inv_dz = c_eff / dz;
    out.e[0] = Complex64::new(0.0, 0.0);
    for j in 1..n {
        out.e[j] = -(y.e[j] - y.e[j - 1]) * inv_dz + ig * y.p[j];
    }
    for j in 0..n {
        let vj = if v.is_empty() { Complex64::new(0.0, 0.0) } else { v[j] };
        let d = Complex64::new(-(rates.gamma_r - vj.im), -(rates.delta_two + vj.re));
        out.p[j] = a * y.p[j] + iw * y.s[j] + ig * y.e[j];
        out.s[j] = d * y.s[j] + iw * y.p[j];
    }
}

fn axpy(dst: &mut Tri, y: &Tri, k: &Tri, h: f64) {
    for j in 0..y.e.len() {
        dst.e[j] = y.e[j] + h * k.e[j];
        dst.p[j] = y.p[j] + h * k.p[j];
        dst.s[j] = y.s[j] + h * k.s[j];
    }
}

fn combine(y: &mut Tri, k1: &Tri, k2: &Tri, k3: &Tri, k4: &Tri, h: f64) {
    let w = h / 6.0;
    for j in 0..y.e.len() {
        y.e[j] += w * (k1.e[j] + 2.0 * k2.e[j] + 2.0 * k3.e[j] + k4.e[j]);
        y.p[j] += w * (k1.p[j] + 2.0 * k2.p[j] + 2.0 * k3.p[j] + k4.p[j]);
        y.s[j] += w * (k1.s[j] + 2.0 * k2.s[j] + 2.0 * k3.s[j] + k4.s[j]);
    }
}

pub(super) fn run_mol_loop(engine: &mut Engine<'_>) -> Result<(), RunError> {
    let cfg = engine.cfg;
    let grid = cfg.grid.clone();
    let control = cfg.control.clone();
    let n_z = grid.n_z;
    let n_pulses = cfg.pulses.len();
    let c_eff = engine.speed;

    engine.refresh_potentials(0.0)?;
    // Boundary values feed the divergence detector.
    for l in 0..n_pulses {
        let b = engine.boundary(l, 0.0);
        engine.max_boundary = engine.max_boundary.max(b.norm());
        engine.state.pulses[l].e[0] = b;
        engine.state.pulses[l].e_free[0] = b;
    }
    engine.record_scalars(0.0);
    engine.record_row(0.0)?;
    engine.maybe_snapshot(0.0);

    let mut k1 = Tri::zeros(n_z);
    let mut k2 = Tri::zeros(n_z);
    let mut k3 = Tri::zeros(n_z);
    let mut k4 = Tri::zeros(n_z);
    let mut tmp = Tri::zeros(n_z);
    let mut y = Tri::zeros(n_z);
    let mut v_mat: Vec<Vec<Complex64>> = vec![Vec::new(); n_pulses];

    for step in 0..grid.n_t {
        let t = step as f64 * grid.dt;
        if step % cfg.settings.potential_stride == 0 {
            engine.refresh_potentials(t)?;
            for l in 0..n_pulses {
                v_mat[l] = match &engine.potentials[l] {
                    PotentialKind::Uniform(v) => {
                        if v.norm_sqr() == 0.0 {
                            Vec::new()
                        } else {
                            vec![*v; n_z]
                        }
                    }
                    PotentialKind::Profile(p) => p.clone(),
                };
            }
        }
        let h = grid.dt;
        let t_mid = t + 0.5 * h;
        let t_end = t + h;
        let (w1, w2, w3) =
            (control_at(&control, t), control_at(&control, t_mid), control_at(&control, t_end));
        for l in 0..n_pulses {
            let rates = engine.rates_for(l);
            let free_rates = engine.free_rates_for(l);
            let b_start = engine.boundary(l, t);
            let b_mid = engine.boundary(l, t_mid);
            let b_end = engine.boundary(l, t_end);
            engine.max_boundary = engine.max_boundary.max(b_end.norm());

            // Interacting triplet, then the free reference with V ≡ 0.
            for (free, v) in [(false, &v_mat[l]), (true, &Vec::new())] {
                let rates = if free { &free_rates } else { &rates };
                {
                    let f = &engine.state.pulses[l];
                    let (se, sp, ss) = if free {
                        (&f.e_free, &f.p_free, &f.s_free)
                    } else {
                        (&f.e, &f.p, &f.s)
                    };
                    y.e.copy_from_slice(se);
                    y.p.copy_from_slice(sp);
                    y.s.copy_from_slice(ss);
                }
                y.e[0] = b_start;
                derivative(&y, v, rates, w1, c_eff, grid.dz, &mut k1);
                axpy(&mut tmp, &y, &k1, 0.5 * h);
                tmp.e[0] = b_mid;
                derivative(&tmp, v, rates, w2, c_eff, grid.dz, &mut k2);
                axpy(&mut tmp, &y, &k2, 0.5 * h);
                tmp.e[0] = b_mid;
                derivative(&tmp, v, rates, w2, c_eff, grid.dz, &mut k3);
                axpy(&mut tmp, &y, &k3, h);
                tmp.e[0] = b_end;
                derivative(&tmp, v, rates, w3, c_eff, grid.dz, &mut k4);
                combine(&mut y, &k1, &k2, &k3, &k4, h);
                y.e[0] = b_end;
                {
                    let f = &mut engine.state.pulses[l];
                    let (se, sp, ss) = if free {
                        (&mut f.e_free, &mut f.p_free, &mut f.s_free)
                    } else {
                        (&mut f.e, &mut f.p, &mut f.s)
                    };
                    se.copy_from_slice(&y.e);
                    sp.copy_from_slice(&y.p);
                    ss.copy_from_slice(&y.s);
                }
            }
        }
        engine.state.t = t_end;
        engine.record_scalars(t_end);
        if (step + 1) % grid.downsample_t == 0 || step + 1 == grid.n_t {
            engine.record_row(t_end)?;
        }
        engine.maybe_snapshot(t_end);
    }
    Ok(())
}
