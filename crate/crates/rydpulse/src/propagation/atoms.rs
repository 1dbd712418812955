//! Fourth-order Runge-Kutta updates of the atomic fields.
//!
//! Per grid cell the polarization/spinwave pair obeys a linear 2×2 system
//!
//! ```text
//! dP/dt = −(γ + iΔp)·P + i·Ωc(t)·S + i·G·E
//! dS/dt = −(γ′ + i(δ + V))·S + i·Ωc(t)·P
//! ```
//!
//! with the light field frozen at its step-start value (first-order
//! splitting) and the potential frozen at its last refresh. The free
//! reference pair obeys the same system with V ≡ 0 and δ = 0.
//!
//! Two equivalent evaluation paths exist: a per-cell textbook RK4 (used when
//! the potential varies across cells) and a precomputed affine map
//! `y ← A·y + w·B` per step (used when the potential is uniform across the
//! array, where the stage algebra collapses to 2×2 matrix products). The
//! engine subdivides a step into equal RK4 substeps whenever |δ+V|·dt
//! approaches the RK4 imaginary-axis stability bound.

use num_complex::Complex64;

use crate::model::{control_at, ControlSchedule};

/// Rates entering one pulse's atomic update.
#[derive(Debug, Clone, Copy)]
pub struct AtomRates {
    /// Intermediate-level decay γ, rad/µs.
    pub gamma: f64,
    /// Rydberg decay γ′ (possibly shifted by Im V), rad/µs.
    pub gamma_r: f64,
    /// One-photon detuning Δp, rad/µs.
    pub delta_p: f64,
    /// Two-photon detuning δ, rad/µs.
    pub delta_two: f64,
    /// Collective coupling G, rad/µs.
    pub coupling_g: f64,
}

/// Control Rabi frequency at the three RK4 stage times.
#[derive(Debug, Clone, Copy)]
pub struct StageControl {
    pub start: f64,
    pub mid: f64,
    pub end: f64,
}

impl StageControl {
    pub fn sample(schedule: &ControlSchedule, t: f64, dt: f64) -> Self {
        StageControl {
            start: control_at(schedule, t),
            mid: control_at(schedule, t + 0.5 * dt),
            end: control_at(schedule, t + dt),
        }
    }
}

#[inline]
fn coeff_p(rates: &AtomRates) -> Complex64 {
    Complex64::new(-rates.gamma, -rates.delta_p)
}

/// Spinwave diagonal coefficient −(γ′ + i(δ + V)) for complex V.
#[inline]
fn coeff_s(rates: &AtomRates, v: Complex64) -> Complex64 {
    Complex64::new(-(rates.gamma_r - v.im), -(rates.delta_two + v.re))
}

/// One classic RK4 step of a single (P, S) cell with frozen drive.
#[inline]
#[allow(clippy::too_many_arguments)]
fn rk4_cell(
    p: Complex64,
    s: Complex64,
    a: Complex64,
    d: Complex64,
    drive: Complex64,
    omega: &StageControl,
    dt: f64,
) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    let (w1, w2, w3) = (i * omega.start, i * omega.mid, i * omega.end);
    let h = dt;

    let k1p = a * p + w1 * s + drive;
    let k1s = d * s + w1 * p;

    let p2 = p + 0.5 * h * k1p;
    let s2 = s + 0.5 * h * k1s;
    let k2p = a * p2 + w2 * s2 + drive;
    let k2s = d * s2 + w2 * p2;

    let p3 = p + 0.5 * h * k2p;
    let s3 = s + 0.5 * h * k2s;
    let k3p = a * p3 + w2 * s3 + drive;
    let k3s = d * s3 + w2 * p3;

    let p4 = p + h * k3p;
    let s4 = s + h * k3s;
    let k4p = a * p4 + w3 * s4 + drive;
    let k4s = d * s4 + w3 * p4;

    (
        p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        s + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
    )
}

/// 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Mat2 {
    pub m: [Complex64; 4],
}

impl Mat2 {
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    pub fn identity() -> Self {
        Mat2 { m: [Self::ONE, Self::ZERO, Self::ZERO, Self::ONE] }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2 {
            m: [
                a[0] * b[0] + a[1] * b[2],
                a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3],
            ],
        }
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            m: [
                self.m[0] + o.m[0],
                self.m[1] + o.m[1],
                self.m[2] + o.m[2],
                self.m[3] + o.m[3],
            ],
        }
    }

    pub fn scale(&self, c: Complex64) -> Mat2 {
        Mat2 { m: [self.m[0] * c, self.m[1] * c, self.m[2] * c, self.m[3] * c] }
    }

    pub fn apply(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        (self.m[0] * x + self.m[1] * y, self.m[2] * x + self.m[3] * y)
    }
}

/// Precomputed affine RK4 step `y ← A·y + drive·b` for a cell-independent
/// coefficient matrix; exactly the RK4 stage algebra in matrix form.
#[derive(Debug, Clone, Copy)]
pub struct AffineStep {
    pub a: Mat2,
    /// Action of the step on a constant drive entering the P component.
    pub b: (Complex64, Complex64),
}

impl AffineStep {
    /// Build the step map for coefficients frozen over one (sub)step.
    pub fn build(a_p: Complex64, d_s: Complex64, omega: &StageControl, dt: f64) -> Self {
        let i = Complex64::new(0.0, 1.0);
        let m1 = Mat2 { m: [a_p, i * omega.start, i * omega.start, d_s] };
        let m2 = Mat2 { m: [a_p, i * omega.mid, i * omega.mid, d_s] };
        let m3 = Mat2 { m: [a_p, i * omega.end, i * omega.end, d_s] };
        let ident = Mat2::identity();
        let h = Complex64::new(dt, 0.0);
        let half = Complex64::new(0.5 * dt, 0.0);

        let k1 = m1;
        let c1 = ident;
        let k2 = m2.mul(&ident.add(&k1.scale(half)));
        let c2 = ident.add(&m2.mul(&c1).scale(half));
        let k3 = m2.mul(&ident.add(&k2.scale(half)));
        let c3 = ident.add(&m2.mul(&c2).scale(half));
        let k4 = m3.mul(&ident.add(&k3.scale(h)));
        let c4 = ident.add(&m3.mul(&c3).scale(h));

        let sixth = Complex64::new(dt / 6.0, 0.0);
        let a = ident.add(
            &k1.add(&k2.scale(Complex64::new(2.0, 0.0)))
                .add(&k3.scale(Complex64::new(2.0, 0.0)))
                .add(&k4)
                .scale(sixth),
        );
        let b_mat = c1
            .add(&c2.scale(Complex64::new(2.0, 0.0)))
            .add(&c3.scale(Complex64::new(2.0, 0.0)))
            .add(&c4)
            .scale(sixth);
        // Drive enters only the P component: keep the first column.
        AffineStep { a, b: (b_mat.m[0], b_mat.m[2]) }
    }

    /// Compose `self` applied after `first`.
    pub fn compose(&self, first: &AffineStep) -> AffineStep {
        let (bx, by) = first.b;
        let (abx, aby) = self.a.apply(bx, by);
        AffineStep { a: self.a.mul(&first.a), b: (abx + self.b.0, aby + self.b.1) }
    }
}

/// Local rotation angle |λ|·dt above which a cell leaves the plain-RK4
/// regime (stability bound 2√2 on the imaginary axis, and the amplitude
/// defect (|λ|dt)⁶/144 per step becomes material well before that). Such
/// cells take the exact frozen-coefficient propagator instead.
pub const RK4_THETA_MAX: f64 = 1.0;

/// Stricter threshold used when the control is off: the cells then undergo
/// sustained pure rotation/decay for arbitrarily many steps (stored
/// spinwaves), where even a tiny per-step RK4 amplitude defect accumulates;
/// the decoupled equation is solved exactly instead.
pub const RK4_THETA_QUIET: f64 = 0.05;

/// Rotation angle per step beyond which even the exact propagator is
/// meaningless: the potential would advance by many cycles between two
/// refreshes, so the run aborts as unresolvably stiff.
pub const THETA_ABORT: f64 = 50.0;

/// Number of equal RK4 substeps that would keep the fastest local rate
/// inside the stability margin. Retained for callers that need the classic
/// subdivided step; the engines use the exact propagator instead.
pub fn substeps_for(dt: f64, max_rate: f64) -> usize {
    let theta = dt * max_rate;
    if theta <= RK4_THETA_MAX {
        1
    } else {
        (theta / RK4_THETA_MAX).ceil() as usize
    }
}

/// Exact affine propagator y ← e^{M·dt}·y + M⁻¹(e^{M·dt} − I)·u for the
/// frozen-coefficient 2×2 system M = [[a, iω], [iω, d]]; the control is
/// sampled at the step midpoint. Exact for constant coefficients whatever
/// the stiffness, so a blockade-scale potential only rotates phases.
pub fn exact_affine_step(
    a_p: Complex64,
    d_s: Complex64,
    omega_mid: f64,
    dt: f64,
) -> AffineStep {
    if omega_mid.abs() * dt < 1e-12 {
        // Decoupled diagonal: handle exactly, including a = 0.
        let ea = (a_p * dt).exp();
        let ed = (d_s * dt).exp();
        let b0 = if a_p.norm() * dt < 1e-9 {
            Complex64::new(dt, 0.0)
        } else {
            (ea - 1.0) / a_p
        };
        return AffineStep {
            a: Mat2 { m: [ea, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), ed] },
            b: (b0, Complex64::new(0.0, 0.0)),
        };
    }
    let iw = Complex64::new(0.0, omega_mid);
    let mean = 0.5 * (a_p + d_s);
    let diff = 0.5 * (a_p - d_s);
    // Eigenvalues mean ± q.
    let q = (diff * diff + iw * iw).sqrt();
    let x = q * dt;
    let (cosh_x, sinc_x) = if x.norm() < 1e-6 {
        // cosh(x) ≈ 1 + x²/2, sinh(x)/x ≈ 1 + x²/6
        let x2 = x * x;
        (Complex64::new(1.0, 0.0) + 0.5 * x2, Complex64::new(1.0, 0.0) + x2 / 6.0)
    } else {
        (x.cosh(), x.sinh() / x)
    };
    let scale = (mean * dt).exp();
    // e^{M dt} = e^{mean dt}[cosh(q dt)·I + sinh(q dt)/q · (M − mean·I)]
    let sd = scale * sinc_x * dt;
    let a = Mat2 {
        m: [
            scale * cosh_x + sd * (a_p - mean),
            sd * iw,
            sd * iw,
            scale * cosh_x + sd * (d_s - mean),
        ],
    };
    // B = M⁻¹(e^{M dt} − I); drive enters the P component only.
    let det = a_p * d_s + omega_mid * omega_mid;
    if det.norm() < 1e-9 * (a_p.norm() * d_s.norm() + omega_mid * omega_mid).max(1.0) {
        // Near-singular corner: one eigenvalue ≈ 0, so this mode is not
        // stiff; the classic subdivided step is adequate there.
        let omega = StageControl { start: omega_mid, mid: omega_mid, end: omega_mid };
        let m = substeps_for(dt, a_p.norm().max(d_s.norm()));
        let h = dt / m as f64;
        let mut total = AffineStep::build(a_p, d_s, &omega, h);
        for _ in 1..m {
            let step = AffineStep::build(a_p, d_s, &omega, h);
            total = step.compose(&total);
        }
        return total;
    }
    let ident = Mat2::identity();
    let a_minus_i = Mat2 {
        m: [
            a.m[0] - ident.m[0],
            a.m[1] - ident.m[1],
            a.m[2] - ident.m[2],
            a.m[3] - ident.m[3],
        ],
    };
    let inv = Mat2 {
        m: [d_s / det, -iw / det, -iw / det, a_p / det],
    };
    let b_full = inv.mul(&a_minus_i);
    AffineStep { a, b: (b_full.m[0], b_full.m[2]) }
}

/// One classic RK4 step of a (P, S) array with the light field frozen and a
/// per-cell complex potential.
///
/// `potential` may be shorter than the arrays only if empty (treated as
/// zero). Free reference pairs are stepped by passing `delta_two = 0` in
/// `rates` and an empty potential.
#[allow(clippy::too_many_arguments)]
pub fn step_atoms_rk4(
    p: &mut [Complex64],
    s: &mut [Complex64],
    e_frozen: &[Complex64],
    potential: &[Complex64],
    rates: &AtomRates,
    schedule: &ControlSchedule,
    t: f64,
    dt: f64,
) {
    let omega = StageControl::sample(schedule, t, dt);
    let a = coeff_p(rates);
    let ig = Complex64::new(0.0, rates.coupling_g);
    let zero = Complex64::new(0.0, 0.0);
    for j in 0..p.len() {
        let v = if potential.is_empty() { zero } else { potential[j] };
        let d = coeff_s(rates, v);
        let drive = ig * e_frozen[j];
        let (np, ns) = rk4_cell(p[j], s[j], a, d, drive, &omega, dt);
        p[j] = np;
        s[j] = ns;
    }
}

/// Subcycled RK4 step with per-cell potential; splits the step into `m`
/// equal substeps, with stage controls sampled inside each substep.
#[allow(clippy::too_many_arguments)]
pub fn step_atoms_subcycled(
    p: &mut [Complex64],
    s: &mut [Complex64],
    e_frozen: &[Complex64],
    potential: &[Complex64],
    rates: &AtomRates,
    schedule: &ControlSchedule,
    t: f64,
    dt: f64,
    m: usize,
) {
    if m <= 1 {
        step_atoms_rk4(p, s, e_frozen, potential, rates, schedule, t, dt);
        return;
    }
    let h = dt / m as f64;
    for k in 0..m {
        step_atoms_rk4(p, s, e_frozen, potential, rates, schedule, t + k as f64 * h, h);
    }
}

/// Per-cell atomic step: classic RK4 inside its accuracy regime, the exact
/// frozen-coefficient propagator where the local potential rotates faster
/// than [`RK4_THETA_MAX`] per step.
#[allow(clippy::too_many_arguments)]
pub fn step_atoms_auto(
    p: &mut [Complex64],
    s: &mut [Complex64],
    e_frozen: &[Complex64],
    potential: &[Complex64],
    rates: &AtomRates,
    schedule: &ControlSchedule,
    t: f64,
    dt: f64,
) {
    let omega = StageControl::sample(schedule, t, dt);
    let a = coeff_p(rates);
    let ig = Complex64::new(0.0, rates.coupling_g);
    let zero = Complex64::new(0.0, 0.0);
    let quiet = omega.start == 0.0 && omega.mid == 0.0 && omega.end == 0.0;
    let rate_limit = if quiet { RK4_THETA_QUIET } else { RK4_THETA_MAX } / dt;
    let a_stiff = a.norm() > rate_limit;
    for j in 0..p.len() {
        let v = if potential.is_empty() { zero } else { potential[j] };
        let d = coeff_s(rates, v);
        let drive = ig * e_frozen[j];
        if !a_stiff && d.norm() <= rate_limit {
            let (np, ns) = rk4_cell(p[j], s[j], a, d, drive, &omega, dt);
            p[j] = np;
            s[j] = ns;
        } else {
            let st = exact_affine_step(a, d, omega.mid, dt);
            let (np, ns) = st.a.apply(p[j], s[j]);
            p[j] = np + st.b.0 * drive;
            s[j] = ns + st.b.1 * drive;
        }
    }
}

/// Affine step for arrays with a cell-independent potential: the RK4 stage
/// algebra when the rates are inside the RK4 regime, the exact propagator
/// beyond it.
pub fn uniform_affine_step(
    rates: &AtomRates,
    v: Complex64,
    schedule: &ControlSchedule,
    t: f64,
    dt: f64,
) -> AffineStep {
    let a = coeff_p(rates);
    let d = coeff_s(rates, v);
    let omega = StageControl::sample(schedule, t, dt);
    let quiet = omega.start == 0.0 && omega.mid == 0.0 && omega.end == 0.0;
    let theta_max = if quiet { RK4_THETA_QUIET } else { RK4_THETA_MAX };
    if a.norm().max(d.norm()) * dt <= theta_max {
        AffineStep::build(a, d, &omega, dt)
    } else {
        exact_affine_step(a, d, omega.mid, dt)
    }
}

/// Apply an affine step to a (P, S) array with per-cell frozen drive.
pub fn apply_affine_step(
    step: &AffineStep,
    p: &mut [Complex64],
    s: &mut [Complex64],
    e_frozen: &[Complex64],
    coupling_g: f64,
) {
    let ig = Complex64::new(0.0, coupling_g);
    let [a00, a01, a10, a11] = step.a.m;
    let (b0, b1) = step.b;
    for ((pj, sj), ej) in p.iter_mut().zip(s.iter_mut()).zip(e_frozen) {
        let w = ig * ej;
        let np = a00 * *pj + a01 * *sj + b0 * w;
        let ns = a10 * *pj + a11 * *sj + b1 * w;
        *pj = np;
        *sj = ns;
    }
}
