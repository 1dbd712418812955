//! Interaction kernels and the four potential models.
//!
//! The physical interaction is the point-point van der Waals shift
//! C₆/r⁶ between Rydberg excitations in the two waveguides. Reducing the
//! dynamics to one longitudinal coordinate per pulse turns it into a 1-D
//! kernel K(Δz): the vdW shift averaged over the partner waveguide's
//! transverse mode at axis separation `a`. The effective potential seen by
//! pulse l is then the discrete convolution of K with the partner's spinwave
//! density.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{EntrySide, Grid, MediumSpec};

/// First zero of the Bessel function J₀.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404825557695773;

/// J₁ evaluated at the first J₀ zero.
pub const BESSEL_J1_AT_FIRST_J0_ZERO: f64 = 0.5191474972894669;

/// Integral of the squared transverse mode J₀²(2ν₀₁ρ/d) over the waveguide
/// cross-section: (π/4)·J₁²(ν₀₁)·d², µm². Converts an on-axis squared
/// amplitude into the line density the 1-D reduction uses.
pub fn transverse_mode_area(diameter: f64) -> f64 {
    0.25 * std::f64::consts::PI
        * BESSEL_J1_AT_FIRST_J0_ZERO
        * BESSEL_J1_AT_FIRST_J0_ZERO
        * diameter
        * diameter
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("vdW potential singular at r = 0")]
    Singularity,
    #[error("waveguide axes too close: separation {separation} ≤ d/2 = {half_diameter}")]
    OverlappingWaveguides { separation: f64, half_diameter: f64 },
    #[error(
        "quadrature non-convergence at offset {offset_um} µm: orders {order_lo}/{order_hi} \
         differ by {rel_change:.3e} (> 1e-6)"
    )]
    NonConvergence { offset_um: f64, order_lo: usize, order_hi: usize, rel_change: f64 },
    #[error("potential input length mismatch: kernel built for {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("NaN in potential input at index {0}")]
    NanInput(usize),
    #[error("kernel cache io: {0}")]
    CacheIo(#[from] std::io::Error),
    #[error("kernel cache corrupt: {0}")]
    CacheCorrupt(String),
}

/// Point-point van der Waals shift C₆/r⁶, rad/µs.
pub fn vdw_point(r: f64, c6: f64) -> Result<f64, KernelError> {
    if r <= 0.0 {
        return Err(KernelError::Singularity);
    }
    let r2 = r * r;
    Ok(c6 / (r2 * r2 * r2))
}

/// Power series for J₀(x); converges to machine precision for |x| ≲ 8,
/// which covers the transverse-mode argument range [0, 2ν₀₁].
fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Gauss–Legendre nodes and weights on (-1, 1), computed by Newton iteration
/// on the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Asymptotic initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Transverse-reduced quadrature of C₆/r⁶ over the partner waveguide mode at
/// a single longitudinal offset.
///
/// Weight w(ρ) ∝ J₀²(2ν₀₁ρ/d), normalized to unit integral over the disk
/// ρ < d/2; the field point sits on the axis of the other waveguide at
/// transverse distance `a`.
fn kernel_offset_quadrature(
    dz_off: f64,
    a: f64,
    d: f64,
    c6: f64,
    order: usize,
    gl_rho: &(Vec<f64>, Vec<f64>),
    gl_phi: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let _ = order;
    let half_d = 0.5 * d;
    let (rho_nodes, rho_weights) = gl_rho;
    let (phi_nodes, phi_weights) = gl_phi;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xr, wr) in rho_nodes.iter().zip(rho_weights) {
        let rho = 0.5 * half_d * (xr + 1.0);
        let jw = {
            let j = bessel_j0(2.0 * BESSEL_J0_FIRST_ZERO * rho / d);
            j * j
        };
        let radial = jw * rho * wr;
        for (xp, wp) in phi_nodes.iter().zip(phi_weights) {
            let phi = std::f64::consts::PI * (xp + 1.0);
            let r_perp2 = a * a + rho * rho + 2.0 * a * rho * phi.cos();
            let r2 = dz_off * dz_off + r_perp2;
            num += radial * wp / (r2 * r2 * r2);
            den += radial * wp;
        }
    }
    c6 * num / den
}

/// Precomputed transverse-reduced 1-D vdW kernel K(Δz) on the grid offsets.
///
/// Symmetric in Δz; `values[k]` holds K(k·dz) for k = 0..n_z−1, in rad/µs
/// per unit 1-D spinwave density (µm⁻¹).
#[derive(Debug, Clone)]
pub struct InteractionKernel {
    pub dz: f64,
    pub n_z: usize,
    pub separation: f64,
    pub diameter: f64,
    pub c6: f64,
    pub quadrature_order: usize,
    pub values: Vec<f64>,
    /// FNV-1a hash of the geometry record; names the cache artifact.
    pub content_hash: u64,
}

const KERNEL_QUAD_ORDER: usize = 32;
const KERNEL_CACHE_MAGIC: &[u8; 4] = b"RYDK";
const KERNEL_CACHE_VERSION: u16 = 1;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn kernel_geometry_bytes(a: f64, d: f64, dz: f64, n_z: usize, c6: f64, order: usize) -> Vec<u8> {
    let mut v = Vec::with_capacity(44);
    v.extend_from_slice(&a.to_le_bytes());
    v.extend_from_slice(&d.to_le_bytes());
    v.extend_from_slice(&dz.to_le_bytes());
    v.extend_from_slice(&(n_z as u64).to_le_bytes());
    v.extend_from_slice(&c6.to_le_bytes());
    v.extend_from_slice(&(order as u32).to_le_bytes());
    v
}

/// Directory for memoized kernels: `RYDPULSE_CACHE_DIR` if set, otherwise a
/// `rydpulse-kernels` directory under the system temp dir.
pub fn kernel_cache_dir() -> PathBuf {
    match std::env::var_os("RYDPULSE_CACHE_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => std::env::temp_dir().join("rydpulse-kernels"),
    }
}

impl InteractionKernel {
    /// Build the kernel for a medium/grid pair, memoized to disk.
    pub fn build(medium: &MediumSpec, grid: &Grid) -> Result<Self, KernelError> {
        Self::build_geometry(
            medium.separation,
            medium.diameter,
            medium.c6,
            grid.dz,
            grid.n_z,
            true,
        )
    }

    /// Build without consulting or writing the disk cache.
    pub fn build_uncached(medium: &MediumSpec, grid: &Grid) -> Result<Self, KernelError> {
        Self::build_geometry(
            medium.separation,
            medium.diameter,
            medium.c6,
            grid.dz,
            grid.n_z,
            false,
        )
    }

    fn build_geometry(
        a: f64,
        d: f64,
        c6: f64,
        dz: f64,
        n_z: usize,
        use_cache: bool,
    ) -> Result<Self, KernelError> {
        if c6 != 0.0 && a <= 0.5 * d {
            return Err(KernelError::OverlappingWaveguides {
                separation: a,
                half_diameter: 0.5 * d,
            });
        }
        let geometry = kernel_geometry_bytes(a, d, dz, n_z, c6, KERNEL_QUAD_ORDER);
        let hash = fnv1a64(&geometry);
        if use_cache {
            if let Some(k) = Self::load_cached(hash, a, d, dz, n_z, c6)? {
                return Ok(k);
            }
        }

        let mut values = vec![0.0; n_z];
        if c6 != 0.0 {
            let gl_lo_r = gauss_legendre(KERNEL_QUAD_ORDER);
            let gl_lo_p = gauss_legendre(KERNEL_QUAD_ORDER);
            let gl_hi_r = gauss_legendre(2 * KERNEL_QUAD_ORDER);
            let gl_hi_p = gauss_legendre(2 * KERNEL_QUAD_ORDER);
            for (k, slot) in values.iter_mut().enumerate() {
                let off = k as f64 * dz;
                let lo =
                    kernel_offset_quadrature(off, a, d, c6, KERNEL_QUAD_ORDER, &gl_lo_r, &gl_lo_p);
                let hi = kernel_offset_quadrature(
                    off,
                    a,
                    d,
                    c6,
                    2 * KERNEL_QUAD_ORDER,
                    &gl_hi_r,
                    &gl_hi_p,
                );
                let rel = (hi - lo).abs() / hi.abs().max(1e-300);
                if rel > 1e-6 {
                    return Err(KernelError::NonConvergence {
                        offset_um: off,
                        order_lo: KERNEL_QUAD_ORDER,
                        order_hi: 2 * KERNEL_QUAD_ORDER,
                        rel_change: rel,
                    });
                }
                *slot = hi;
            }
        }

        let kernel = InteractionKernel {
            dz,
            n_z,
            separation: a,
            diameter: d,
            c6,
            quadrature_order: 2 * KERNEL_QUAD_ORDER,
            values,
            content_hash: hash,
        };
        if use_cache {
            // Cache failures are not fatal; the kernel is already built.
            let _ = kernel.store_cached();
        }
        Ok(kernel)
    }

    /// K(Δz) by symmetric lookup; zero beyond the covered offsets.
    pub fn at_offset(&self, k: isize) -> f64 {
        let k = k.unsigned_abs();
        if k < self.values.len() {
            self.values[k]
        } else {
            0.0
        }
    }

    fn cache_path(hash: u64) -> PathBuf {
        kernel_cache_dir().join(format!("rydk_{hash:016x}.bin"))
    }

    fn store_cached(&self) -> Result<(), KernelError> {
        let dir = kernel_cache_dir();
        fs::create_dir_all(&dir)?;
        let path = Self::cache_path(self.content_hash);
        let tmp = path.with_extension("tmp");
        let mut buf = Vec::with_capacity(64 + 8 * self.values.len());
        buf.extend_from_slice(KERNEL_CACHE_MAGIC);
        buf.extend_from_slice(&KERNEL_CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&kernel_geometry_bytes(
            self.separation,
            self.diameter,
            self.dz,
            self.n_z,
            self.c6,
            KERNEL_QUAD_ORDER,
        ));
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn load_cached(
        hash: u64,
        a: f64,
        d: f64,
        dz: f64,
        n_z: usize,
        c6: f64,
    ) -> Result<Option<Self>, KernelError> {
        let path = Self::cache_path(hash);
        let mut bytes = Vec::new();
        match fs::File::open(&path) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes)?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let expected_geo = kernel_geometry_bytes(a, d, dz, n_z, c6, KERNEL_QUAD_ORDER);
        let header_len = 4 + 2 + expected_geo.len();
        if bytes.len() != header_len + 8 * n_z {
            return Err(KernelError::CacheCorrupt(format!(
                "{}: bad length {}",
                path.display(),
                bytes.len()
            )));
        }
        if &bytes[0..4] != KERNEL_CACHE_MAGIC {
            return Err(KernelError::CacheCorrupt(format!("{}: bad magic", path.display())));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != KERNEL_CACHE_VERSION {
            return Ok(None);
        }
        if bytes[6..header_len] != expected_geo[..] {
            return Err(KernelError::CacheCorrupt(format!(
                "{}: geometry record mismatch (hash collision?)",
                path.display()
            )));
        }
        let mut values = Vec::with_capacity(n_z);
        for chunk in bytes[header_len..].chunks_exact(8) {
            values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        Ok(Some(InteractionKernel {
            dz,
            n_z,
            separation: a,
            diameter: d,
            c6,
            quadrature_order: 2 * KERNEL_QUAD_ORDER,
            values,
            content_hash: hash,
        }))
    }
}

/// Convenience wrapper matching the operation name.
pub fn build_kernel(medium: &MediumSpec, grid: &Grid) -> Result<InteractionKernel, KernelError> {
    InteractionKernel::build(medium, grid)
}

/// How the effective potential rescales the partner's squared spinwave
/// profile before convolving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Rescale |S_free|² by the pulse's total input norm so the partner's
    /// in-medium excitation norm equals its surviving-photon probability
    /// (one photon per pulse).
    SinglePhoton,
    /// Bare c-number convention: the engine converts the Rabi-scaled
    /// profile back to the physical spinwave amplitude via √(N·W(d))/G
    /// (atomic density, transverse mode area, collective coupling) and the
    /// squared profile is used with no further rescaling.
    Raw,
}

/// Interaction potential profile for one pulse at one instant, rad/µs.
///
/// Values are complex with the imaginary part reserved; all shipped models
/// produce real potentials.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl PotentialField {
    pub fn zeros(n_z: usize, t: f64) -> Self {
        PotentialField { values: vec![Complex64::new(0.0, 0.0); n_z], t }
    }

    pub fn uniform(v: Complex64, n_z: usize, t: f64) -> Self {
        PotentialField { values: vec![v; n_z], t }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).fold(0.0_f64, f64::max).sqrt()
    }
}

/// Convolution backend used for the nonlocal potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvMethod {
    /// O(n²) direct summation; the correctness reference.
    Direct,
    /// Radix-2 FFT circular convolution with zero padding; must agree with
    /// the direct path to 1e-10 relative.
    Fft,
}

/// In-place iterative radix-2 complex FFT. `data.len()` must be a power of 2.
fn fft_radix2(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * std::f64::consts::TAU / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = data[start + k];
                let v = data[start + k + len / 2] * w;
                data[start + k] = u + v;
                data[start + k + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }
}

/// Reusable FFT workspace for repeated convolutions against one kernel.
#[derive(Debug, Clone)]
pub struct ConvPlan {
    len: usize,
    kernel_spectrum: Vec<Complex64>,
    n_z: usize,
    dz: f64,
}

impl ConvPlan {
    pub fn new(kernel: &InteractionKernel) -> Self {
        let n = kernel.n_z;
        let len = (2 * n).next_power_of_two().max(2);
        let mut padded = vec![Complex64::new(0.0, 0.0); len];
        for k in 0..n {
            padded[k] = Complex64::new(kernel.values[k], 0.0);
        }
        for k in 1..n {
            padded[len - k] = Complex64::new(kernel.values[k], 0.0);
        }
        fft_radix2(&mut padded, false);
        ConvPlan { len, kernel_spectrum: padded, n_z: n, dz: kernel.dz }
    }

    /// Circular convolution (K ⊛ density)·dz restricted to the grid.
    pub fn convolve(&self, density: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &d) in buf.iter_mut().zip(density) {
            *b = Complex64::new(d, 0.0);
        }
        fft_radix2(&mut buf, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= k;
        }
        fft_radix2(&mut buf, true);
        buf[..self.n_z].iter().map(|c| c.re * self.dz).collect()
    }
}

/// Direct O(n²) convolution (K ⊛ density)·dz; the correctness reference.
pub fn convolve_direct(kernel: &InteractionKernel, density: &[f64]) -> Vec<f64> {
    let n = kernel.n_z;
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &d) in density.iter().enumerate() {
            acc += kernel.at_offset(i as isize - j as isize) * d;
        }
        *o = acc * kernel.dz;
    }
    out
}

fn check_density_input(kernel: &InteractionKernel, spinwave: &[Complex64]) -> Result<(), KernelError> {
    if spinwave.len() != kernel.n_z {
        return Err(KernelError::LengthMismatch { expected: kernel.n_z, got: spinwave.len() });
    }
    if let Some(j) = spinwave.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(KernelError::NanInput(j));
    }
    Ok(())
}

/// Squared-magnitude density of a spinwave profile under a norm mode.
///
/// `input_norm` is the pulse's total input norm c·∫|Ω_p|²dt; under
/// [`NormMode::SinglePhoton`] the density integrates to the partner's
/// surviving-photon probability.
pub fn spinwave_density(spinwave: &[Complex64], norm_mode: NormMode, input_norm: f64) -> Vec<f64> {
    let scale = match norm_mode {
        NormMode::SinglePhoton => {
            if input_norm > 0.0 {
                1.0 / input_norm
            } else {
                0.0
            }
        }
        NormMode::Raw => 1.0,
    };
    spinwave.iter().map(|c| c.norm_sqr() * scale).collect()
}

/// Nonlocal effective potential: K convolved with the partner's freely
/// evolving spinwave density.
///
/// `partner_free_spinwave` must already be expressed on physical
/// coordinates (counter-propagating partners are mirrored z′ → L−z′ before
/// the convolution; see [`mirror_into_physical`]).
pub fn effective_potential(
    kernel: &InteractionKernel,
    partner_free_spinwave: &[Complex64],
    norm_mode: NormMode,
    input_norm: f64,
    plan: Option<&ConvPlan>,
    t: f64,
) -> Result<PotentialField, KernelError> {
    check_density_input(kernel, partner_free_spinwave)?;
    let density = spinwave_density(partner_free_spinwave, norm_mode, input_norm);
    let conv = match plan {
        Some(p) => p.convolve(&density),
        None => convolve_direct(kernel, &density),
    };
    Ok(PotentialField { values: conv.into_iter().map(|v| Complex64::new(v, 0.0)).collect(), t })
}

/// Mean-field potential: same convolution core as [`effective_potential`]
/// but consuming the partner's interacting spinwave itself.
pub fn mean_field_potential(
    kernel: &InteractionKernel,
    partner_spinwave: &[Complex64],
    norm_mode: NormMode,
    input_norm: f64,
    plan: Option<&ConvPlan>,
    t: f64,
) -> Result<PotentialField, KernelError> {
    effective_potential(kernel, partner_spinwave, norm_mode, input_norm, plan, t)
}

/// Blockade step potential: `v_in` everywhere while the inter-pulse peak
/// separation is below the blockade radius, zero otherwise.
pub fn blockade_potential(
    r_b: f64,
    v_in: f64,
    pulse_positions: (f64, f64),
    n_z: usize,
    t: f64,
) -> PotentialField {
    let sep = (pulse_positions.0 - pulse_positions.1).abs();
    let v = if sep < r_b { v_in } else { 0.0 };
    PotentialField::uniform(Complex64::new(v, 0.0), n_z, t)
}

/// Uniform constant potential V⁰.
pub fn constant_potential(v0: f64, n_z: usize, t: f64) -> PotentialField {
    PotentialField::uniform(Complex64::new(v0, 0.0), n_z, t)
}

/// Map a profile from a pulse's advection frame to physical coordinates
/// (identity for left entry, index reversal for right entry).
pub fn mirror_into_physical<T: Copy>(frame: &[T], entry: EntrySide) -> Vec<T> {
    match entry {
        EntrySide::Left => frame.to_vec(),
        EntrySide::Right => frame.iter().rev().copied().collect(),
    }
}
