//! Adiabatic-elimination variant.
//!
//! Setting ∂tP = 0 gives P = (iΩc·S + iG·E)/(γ + iΔp); substituting it into
//! the field and spinwave equations and absorbing the secular decay factors
//! into primed fields E′, S′ leaves
//!
//! ```text
//! c·∂z E′ = −G·w·Ωc(t)·exp(+κz)·exp(−µ(t))·S′
//! ∂t S′  = −i·V·S′ − G·w·Ωc(t)·exp(+µ(t))·exp(−κz)·E′
//! ```
//!
//! with w = (γ − iΔp)/(γ² + Δp²), κ = (G²/c)·w and µ(t) = w·∫₀ᵗ Ωc²dτ. The
//! physical fields are recovered through E = e^{−κz}E′, S = e^{−µ}S′ and the
//! eliminated polarization is reported via the same P relation. The free
//! reference triplet evolves with the unreduced equations, and the
//! interaction potential is built from it exactly as in the full variant.

use num_complex::Complex64;

use super::{Engine, PotentialKind, RunError};
use crate::model::control_at;
use crate::propagation::atoms::{
    apply_affine_step, uniform_affine_step, RK4_THETA_MAX, RK4_THETA_QUIET, THETA_ABORT,
};
use crate::SPEED_OF_LIGHT;

/// RK4 step of ds/dt = λ·s + drive(t) with the three stage drives supplied.
#[inline]
pub(crate) fn rk4_scalar(
    s: Complex64,
    lam: Complex64,
    d1: Complex64,
    d2: Complex64,
    d3: Complex64,
    h: f64,
) -> Complex64 {
    let k1 = lam * s + d1;
    let k2 = lam * (s + 0.5 * h * k1) + d2;
    let k3 = lam * (s + 0.5 * h * k2) + d2;
    let k4 = lam * (s + h * k3) + d3;
    s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

pub(super) fn run_adiabatic_loop(engine: &mut Engine<'_>) -> Result<(), RunError> {
    let cfg = engine.cfg;
    let grid = cfg.grid.clone();
    let control = cfg.control.clone();
    let n_z = grid.n_z;
    let n_pulses = cfg.pulses.len();
    let g = engine.coupling;
    let c = SPEED_OF_LIGHT;

    // Per-pulse reduction constants.
    let w: Vec<Complex64> = cfg
        .pulses
        .iter()
        .map(|p| {
            let denom = cfg.medium.gamma * cfg.medium.gamma + p.delta_p * p.delta_p;
            Complex64::new(cfg.medium.gamma, -p.delta_p) / denom
        })
        .collect();
    let kappa: Vec<Complex64> = w.iter().map(|wi| wi * g * g / c).collect();
    let decay_profile: Vec<Vec<Complex64>> = kappa
        .iter()
        .map(|k| (0..n_z).map(|j| (-k * (j as f64 * grid.dz)).exp()).collect())
        .collect();
    let grow_profile: Vec<Vec<Complex64>> = kappa
        .iter()
        .map(|k| (0..n_z).map(|j| (k * (j as f64 * grid.dz)).exp()).collect())
        .collect();

    let mut e_prime: Vec<Vec<Complex64>> =
        (0..n_pulses).map(|_| vec![Complex64::new(0.0, 0.0); n_z]).collect();
    let mut s_prime: Vec<Vec<Complex64>> =
        (0..n_pulses).map(|_| vec![Complex64::new(0.0, 0.0); n_z]).collect();
    // Accumulated ∫₀ᵗ Ωc²dτ.
    let mut i_omega2 = 0.0_f64;

    #[allow(clippy::too_many_arguments)]
    fn convert(
        engine: &mut Engine<'_>,
        w: &[Complex64],
        decay_profile: &[Vec<Complex64>],
        e_prime: &[Vec<Complex64>],
        s_prime: &[Vec<Complex64>],
        i_omega2: f64,
        omega: f64,
        g: f64,
    ) {
        let gamma = engine.cfg.medium.gamma;
        for l in 0..engine.cfg.pulses.len() {
            let mu = w[l] * i_omega2;
            let s_scale = (-mu).exp();
            let denom_inv =
                Complex64::new(1.0, 0.0) / Complex64::new(gamma, engine.cfg.pulses[l].delta_p);
            let fields = &mut engine.state.pulses[l];
            for j in 0..fields.e.len() {
                let e = decay_profile[l][j] * e_prime[l][j];
                let s = s_scale * s_prime[l][j];
                fields.e[j] = e;
                fields.s[j] = s;
                fields.p[j] =
                    (Complex64::new(0.0, omega) * s + Complex64::new(0.0, g) * e) * denom_inv;
            }
        }
    }

    // Initial condition: uniform boundary value in the primed field.
    for l in 0..n_pulses {
        let b = engine.boundary(l, 0.0);
        engine.max_boundary = engine.max_boundary.max(b.norm());
        e_prime[l].fill(b);
        engine.state.pulses[l].e_free.fill(b);
    }
    engine.refresh_potentials(0.0)?;
    convert(engine, &w, &decay_profile, &e_prime, &s_prime, i_omega2, control_at(&control, 0.0), g);
    engine.record_scalars(0.0);
    engine.record_row(0.0)?;
    engine.maybe_snapshot(0.0);

    for step in 0..grid.n_t {
        let t = step as f64 * grid.dt;
        let h = grid.dt;
        if step % cfg.settings.potential_stride == 0 {
            engine.refresh_potentials(t)?;
        }

        for l in 0..n_pulses {
            let vmax = engine.potentials[l].max_abs();
            let theta_max = h * (vmax + cfg.pulses[l].delta_two.abs());
            if theta_max > THETA_ABORT {
                return Err(RunError::Divergence {
                    t,
                    detail: format!(
                        "potential magnitude {vmax:.3e} rad/µs advances {theta_max:.1} rad \
                         per step"
                    ),
                });
            }
            let gw = w[l] * g;
            let wl = w[l];
            {
                let o1 = control_at(&control, t);
                let o2 = control_at(&control, t + 0.5 * h);
                let o3 = control_at(&control, t + h);
                let i1 = i_omega2;
                let i2 = i_omega2 + 0.25 * h * (o1 * o1 + o2 * o2);
                let i3 = i_omega2 + 0.5 * h * (o1 * o1 + o3 * o3);
                let g1 = -(gw * o1) * (wl * i1).exp();
                let g2 = -(gw * o2) * (wl * i2).exp();
                let g3 = -(gw * o3) * (wl * i3).exp();
                let sp = &mut s_prime[l];
                let ep = &e_prime[l];
                let decay = &decay_profile[l];
                let quiet = o1 == 0.0 && o2 == 0.0 && o3 == 0.0;
                let theta_max = if quiet { RK4_THETA_QUIET } else { RK4_THETA_MAX };
                let cell = |sj: Complex64, vj: Complex64, base: Complex64| -> Complex64 {
                    let lam = Complex64::new(vj.im, -vj.re);
                    if lam.norm() * h <= theta_max {
                        rk4_scalar(sj, lam, g1 * base, g2 * base, g3 * base, h)
                    } else if lam.norm() * h < 1e-12 {
                        sj + g2 * base * h
                    } else {
                        // Exact frozen-coefficient propagator with the
                        // midpoint drive.
                        let el = (lam * h).exp();
                        el * sj + (el - 1.0) / lam * (g2 * base)
                    }
                };
                match &engine.potentials[l] {
                    PotentialKind::Uniform(v) => {
                        for j in 0..n_z {
                            let base = decay[j] * ep[j];
                            sp[j] = cell(sp[j], *v, base);
                        }
                    }
                    PotentialKind::Profile(v) => {
                        for j in 0..n_z {
                            let base = decay[j] * ep[j];
                            sp[j] = cell(sp[j], v[j], base);
                        }
                    }
                }
            }

            // Free reference triplet: unreduced equations.
            let free_rates = engine.free_rates_for(l);
            let free_map =
                uniform_affine_step(&free_rates, Complex64::new(0.0, 0.0), &control, t, h);
            let fields = &mut engine.state.pulses[l];
            apply_affine_step(
                &free_map,
                &mut fields.p_free,
                &mut fields.s_free,
                &fields.e_free,
                free_rates.coupling_g,
            );
        }

        let t_next = t + h;
        let om_start = control_at(&control, t);
        let om_end = control_at(&control, t_next);
        i_omega2 += 0.5 * h * (om_start * om_start + om_end * om_end);

        for l in 0..n_pulses {
            let b = engine.boundary(l, t_next);
            engine.max_boundary = engine.max_boundary.max(b.norm());
            let g2 = -(w[l] * g * om_end) * (-w[l] * i_omega2).exp();
            let grow = &grow_profile[l];
            let sp = &s_prime[l];
            let ep = &mut e_prime[l];
            ep[0] = b;
            let f = grid.dz / (2.0 * c);
            for j in 0..n_z - 1 {
                let rhs_j = g2 * grow[j] * sp[j];
                let rhs_j1 = g2 * grow[j + 1] * sp[j + 1];
                ep[j + 1] = ep[j] + f * (rhs_j + rhs_j1);
            }
            let fields = &mut engine.state.pulses[l];
            super::integrate_field_quasistatic(&mut fields.e_free, &fields.p_free, b, g, grid.dz);
        }

        engine.state.t = t_next;
        convert(engine, &w, &decay_profile, &e_prime, &s_prime, i_omega2, om_end, g);
        engine.record_scalars(t_next);
        if (step + 1) % grid.downsample_t == 0 || step + 1 == grid.n_t {
            engine.record_row(t_next)?;
        }
        engine.maybe_snapshot(t_next);
    }
    Ok(())
}
