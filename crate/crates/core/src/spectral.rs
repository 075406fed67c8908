//! Frequency-lattice primitives: the moving-frame symbol of `-Δ_L`, velocity
//! recovery from vorticity, frame changes and lattice norms.
//!
//! Fields live on `𝕋 × ℝ`. The horizontal wavenumber `k` is an integer and the
//! vertical frequency is sampled on a uniform symmetric lattice
//! `η_j = j Δη`, `|j| ≤ j_max`. All norms use the rectangle rule in `η`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Lost energy (relative to the whole field) tolerated by [`frame_shift`].
const OVERFLOW_ENERGY_TOL: f64 = 1e-20;

/// Buoyancy frequency and dissipation coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub beta: f64,
    pub nu: f64,
    pub kappa: f64,
}

impl PhysicalParams {
    pub fn new(beta: f64, nu: f64, kappa: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidInput("beta must be > 0".into()));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::InvalidInput("nu must be finite and >= 0".into()));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidInput("kappa must be finite and >= 0".into()));
        }
        Ok(Self { beta, nu, kappa })
    }

    pub fn inviscid(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0, 0.0)
    }

    /// Richardson criterion for Couette, `β² > 1/4`.
    pub fn miles_howard(&self) -> bool {
        self.beta * self.beta > 0.25
    }

    pub fn is_inviscid(&self) -> bool {
        self.nu == 0.0 && self.kappa == 0.0
    }

    /// Both dissipations positive and `max(ν,κ)/min(ν,κ) < 4β − 1`.
    pub fn enhanced_ok(&self) -> bool {
        if self.nu <= 0.0 || self.kappa <= 0.0 {
            return false;
        }
        let (lo, hi) = min_max(self.nu, self.kappa);
        hi / lo < 4.0 * self.beta - 1.0
    }

    /// `C_β = [ (2β+1)/(2β−1) · exp(1/(2β−1)) ]^{1/2}`, defined for `β > 1/2`.
    pub fn c_beta(&self) -> Option<f64> {
        let b = self.beta;
        if b <= 0.5 {
            return None;
        }
        Some(((2.0 * b + 1.0) / (2.0 * b - 1.0) * (1.0 / (2.0 * b - 1.0)).exp()).sqrt())
    }

    /// `λ_{ν,κ} = min(ν,κ) (1 − 1/(4β) − max(ν,κ)/(4β min(ν,κ)))`, when `enhanced_ok`.
    pub fn lambda_nu_kappa(&self) -> Option<f64> {
        if !self.enhanced_ok() {
            return None;
        }
        let (lo, hi) = min_max(self.nu, self.kappa);
        let four_beta = 4.0 * self.beta;
        Some(lo * (1.0 - 1.0 / four_beta - hi / (four_beta * lo)))
    }
}

fn min_max(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A moving-frame frequency pair `(k, η)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: i64,
    pub eta: f64,
}

impl Mode {
    pub fn new(k: i64, eta: f64) -> Self {
        Self { k, eta }
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }
}

/// Vorticity and density amplitudes of one mode at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub omega: Complex64,
    pub theta: Complex64,
    pub t: f64,
}

impl ModeState {
    pub fn new(omega: Complex64, theta: Complex64, t: f64) -> Self {
        Self { omega, theta, t }
    }

    pub fn zero(t: f64) -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), t)
    }

    pub fn is_zero(&self) -> bool {
        self.omega == Complex64::new(0.0, 0.0) && self.theta == Complex64::new(0.0, 0.0)
    }
}

/// Symbol of `−Δ_L`: `p(t,k,η) = k² + (η − kt)²`.
pub fn symbol_p(t: f64, m: Mode) -> f64 {
    let k = m.kf();
    let shifted = m.eta - k * t;
    k * k + shifted * shifted
}

/// `∂_t p(t,k,η) = −2k(η − kt)`.
pub fn symbol_dtp(t: f64, m: Mode) -> f64 {
    let k = m.kf();
    -2.0 * k * (m.eta - k * t)
}

/// Moving-frame velocity `(û^x, û^y)` of a mode, from `Ψ̂ = −Ω̂/p` and `u = ∇^⊥ψ`.
pub fn velocity_from_vorticity(s: &ModeState, m: Mode) -> Result<(Complex64, Complex64)> {
    if m.k == 0 && m.eta == 0.0 {
        return Err(Error::UndeterminedMeanFlow);
    }
    let p = symbol_p(s.t, m);
    let i = Complex64::i();
    let k = m.kf();
    let ux = i * (m.eta - k * s.t) * s.omega / p;
    let uy = -i * k * s.omega / p;
    Ok((ux, uy))
}

/// Which of the two transported scalars a norm is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Omega,
    Theta,
}

/// Uniform symmetric lattice `k ∈ [−k_max, k_max]`, `η_j = j Δη` with `|j| ≤ j_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub k_max: usize,
    pub j_max: usize,
    pub eta_spacing: f64,
}

impl Lattice {
    pub fn new(k_max: usize, j_max: usize, eta_spacing: f64) -> Result<Self> {
        if !(eta_spacing.is_finite() && eta_spacing > 0.0) {
            return Err(Error::InvalidInput("eta_spacing must be > 0".into()));
        }
        Ok(Self {
            k_max,
            j_max,
            eta_spacing,
        })
    }

    pub fn nk(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn neta(&self) -> usize {
        2 * self.j_max + 1
    }

    pub fn len(&self) -> usize {
        self.nk() * self.neta()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eta(&self, j: i64) -> f64 {
        j as f64 * self.eta_spacing
    }

    pub fn contains(&self, k: i64, j: i64) -> bool {
        k.unsigned_abs() as usize <= self.k_max && j.unsigned_abs() as usize <= self.j_max
    }

    pub fn index(&self, k: i64, j: i64) -> usize {
        debug_assert!(self.contains(k, j));
        let row = (k + self.k_max as i64) as usize;
        let col = (j + self.j_max as i64) as usize;
        row * self.neta() + col
    }

    pub fn k_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.k_max as i64)..=self.k_max as i64
    }

    pub fn j_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.j_max as i64)..=self.j_max as i64
    }

    /// All `(k, j)` pairs in storage order.
    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.k_range()
            .flat_map(move |k| self.j_range().map(move |j| (k, j)))
    }
}

/// Coefficient table of `(Ω̂, Θ̂)` on a [`Lattice`].
///
/// Real physical fields satisfy `f̂(−k,−η) = conj f̂(k,η)`; the constructors do
/// not enforce it, but every operation in this crate preserves it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    lattice: Lattice,
    omega: Vec<Complex64>,
    theta: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(lattice: Lattice) -> Self {
        let n = lattice.len();
        Self {
            lattice,
            omega: vec![Complex64::new(0.0, 0.0); n],
            theta: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Fills every lattice point from `f(k, η) -> (Ω̂, Θ̂)`.
    pub fn from_fn<F>(lattice: Lattice, f: F) -> Self
    where
        F: Fn(i64, f64) -> (Complex64, Complex64),
    {
        let mut field = Self::zeros(lattice);
        for (idx, (k, j)) in lattice.points().enumerate() {
            let (om, th) = f(k, lattice.eta(j));
            field.omega[idx] = om;
            field.theta[idx] = th;
        }
        field
    }

    pub fn from_parts(
        lattice: Lattice,
        omega: Vec<Complex64>,
        theta: Vec<Complex64>,
    ) -> Result<Self> {
        if omega.len() != lattice.len() || theta.len() != lattice.len() {
            return Err(Error::InvalidInput(format!(
                "coefficient tables must have {} entries",
                lattice.len()
            )));
        }
        Ok(Self {
            lattice,
            omega,
            theta,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn omega(&self) -> &[Complex64] {
        &self.omega
    }

    pub fn theta(&self) -> &[Complex64] {
        &self.theta
    }

    pub fn component(&self, c: Component) -> &[Complex64] {
        match c {
            Component::Omega => &self.omega,
            Component::Theta => &self.theta,
        }
    }

    pub fn get(&self, k: i64, j: i64) -> (Complex64, Complex64) {
        let idx = self.lattice.index(k, j);
        (self.omega[idx], self.theta[idx])
    }

    pub fn set(&mut self, k: i64, j: i64, omega: Complex64, theta: Complex64) {
        let idx = self.lattice.index(k, j);
        self.omega[idx] = omega;
        self.theta[idx] = theta;
    }

    /// Sets `(k, j)` and its mirror `(−k, −j)` to keep the field real.
    pub fn set_hermitian(&mut self, k: i64, j: i64, omega: Complex64, theta: Complex64) {
        self.set(k, j, omega, theta);
        if (k, j) != (0, 0) {
            self.set(-k, -j, omega.conj(), theta.conj());
        } else {
            self.set(
                0,
                0,
                Complex64::new(omega.re, 0.0),
                Complex64::new(theta.re, 0.0),
            );
        }
    }

    /// Largest `|f̂(−k,−η) − conj f̂(k,η)|` over both components.
    pub fn hermitian_defect(&self) -> f64 {
        let l = &self.lattice;
        let mut worst: f64 = 0.0;
        for (k, j) in l.points() {
            let a = l.index(k, j);
            let b = l.index(-k, -j);
            worst = worst
                .max((self.omega[b] - self.omega[a].conj()).norm())
                .max((self.theta[b] - self.theta[a].conj()).norm());
        }
        worst
    }

    pub fn is_zero(&self) -> bool {
        let z = Complex64::new(0.0, 0.0);
        self.omega.iter().chain(self.theta.iter()).all(|c| *c == z)
    }

    fn row_mut<'a>(data: &'a mut [Complex64], lattice: &Lattice, k: i64) -> &'a mut [Complex64] {
        let start = lattice.index(k, -(lattice.j_max as i64));
        &mut data[start..start + lattice.neta()]
    }

    fn row<'a>(data: &'a [Complex64], lattice: &Lattice, k: i64) -> &'a [Complex64] {
        let start = lattice.index(k, -(lattice.j_max as i64));
        &data[start..start + lattice.neta()]
    }
}

/// Direction of a [`frame_shift`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDirection {
    /// Static vertical frequency `ξ` to moving-frame `η = ξ + kt`.
    ToMoving,
    /// Moving-frame `η` back to static `ξ = η − kt`.
    ToStatic,
}

/// Re-indexes a field between the static and the moving (sheared) frame.
///
/// Row `k` is translated by `±kt` in `η`. Shifts that are integer multiples of
/// the lattice spacing are pure re-indexing and exact; fractional remainders use
/// band-limited (Fourier-phase) interpolation along the row.
pub fn frame_shift(
    field: &SpectralField,
    t: f64,
    direction: FrameDirection,
) -> Result<SpectralField> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput("frame_shift requires t >= 0".into()));
    }
    let lattice = *field.lattice();
    let mut out = field.clone();
    if t == 0.0 {
        return Ok(out);
    }
    let sign = match direction {
        FrameDirection::ToMoving => 1.0,
        FrameDirection::ToStatic => -1.0,
    };
    let total_energy: f64 = field
        .omega
        .iter()
        .chain(field.theta.iter())
        .map(|c| c.norm_sqr())
        .sum();
    let n = lattice.neta();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    for k in 1..=lattice.k_max as i64 {
        // out[j] = in[j − cells]
        let cells = sign * k as f64 * t / lattice.eta_spacing;
        let whole = cells.round();
        let frac = cells - whole;
        let exact = frac.abs() <= 1e-12 * cells.abs().max(1.0);
        let whole = whole as i64;

        for data in [&field.omega, &field.theta] {
            let row = SpectralField::row(data, &lattice, k);
            let lost = lost_energy(row, whole, if exact { 0.0 } else { frac });
            if total_energy > 0.0 && lost > OVERFLOW_ENERGY_TOL * total_energy {
                return Err(Error::LatticeOverflow {
                    k,
                    fraction: lost / total_energy,
                });
            }
        }

        for (src, dst) in [
            (&field.omega, &mut out.omega),
            (&field.theta, &mut out.theta),
        ] {
            let row = SpectralField::row(src, &lattice, k);
            let mut shifted = shift_row_whole(row, whole);
            if !exact {
                shift_row_fractional(&mut shifted, frac, fwd.as_ref(), inv.as_ref());
            }
            SpectralField::row_mut(dst, &lattice, k).copy_from_slice(&shifted);
            // mirror row −k from row k
            for (jj, val) in shifted.iter().enumerate() {
                let j = jj as i64 - lattice.j_max as i64;
                let idx = lattice.index(-k, -j);
                dst[idx] = val.conj();
            }
        }
    }
    Ok(out)
}

fn lost_energy(row: &[Complex64], whole: i64, frac: f64) -> f64 {
    let n = row.len() as i64;
    row.iter()
        .enumerate()
        .filter(|(i, _)| {
            let target = *i as f64 + whole as f64 + frac;
            target < -0.5 || target > (n - 1) as f64 + 0.5
        })
        .map(|(_, c)| c.norm_sqr())
        .sum()
}

fn shift_row_whole(row: &[Complex64], whole: i64) -> Vec<Complex64> {
    let n = row.len() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); row.len()];
    for (i, c) in row.iter().enumerate() {
        let target = i as i64 + whole;
        if (0..n).contains(&target) {
            out[target as usize] = *c;
        }
    }
    out
}

fn shift_row_fractional(
    row: &mut [Complex64],
    frac: f64,
    fwd: &dyn rustfft::Fft<f64>,
    inv: &dyn rustfft::Fft<f64>,
) {
    let n = row.len();
    fwd.process(row);
    for (m, c) in row.iter_mut().enumerate() {
        let centered = if m <= n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        };
        let phase = -2.0 * std::f64::consts::PI * centered * frac / n as f64;
        *c *= Complex64::from_polar(1.0 / n as f64, phase);
    }
    inv.process(row);
}

/// Splits a field into its `k = 0` part and the rest; the two tables partition the input.
pub fn split_zero_mode(field: &SpectralField) -> (SpectralField, SpectralField) {
    let lattice = *field.lattice();
    let mut zero = SpectralField::zeros(lattice);
    let mut rest = field.clone();
    for j in lattice.j_range() {
        let idx = lattice.index(0, j);
        zero.omega[idx] = field.omega[idx];
        zero.theta[idx] = field.theta[idx];
        rest.omega[idx] = Complex64::new(0.0, 0.0);
        rest.theta[idx] = Complex64::new(0.0, 0.0);
    }
    (zero, rest)
}

/// Gevrey-`1/s` norm `(Σ_k ∫ e^{2λ(|k|+|η|)^s} |f̂|² dη)^{1/2}` with rectangle-rule quadrature.
pub fn gevrey_norm(
    field: &SpectralField,
    component: Component,
    lambda: f64,
    s: f64,
) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput("lambda must be finite and >= 0".into()));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidInput("s must lie in (0, 1]".into()));
    }
    let l = field.lattice();
    let data = field.component(component);
    let mut sum = 0.0;
    for ((k, j), c) in l.points().zip(data.iter()) {
        let amp = c.norm_sqr();
        if amp == 0.0 {
            continue;
        }
        let eta = l.eta(j);
        let freq = k.unsigned_abs() as f64 + eta.abs();
        // in log space, so the weight alone may exceed f64 range
        let term = (2.0 * lambda * freq.powf(s) + amp.ln()).exp();
        if !term.is_finite() {
            return Err(Error::GevreyWeightOverflow { k, eta });
        }
        sum += term;
    }
    let total = sum * l.eta_spacing;
    if !total.is_finite() {
        return Err(Error::GevreyWeightOverflow {
            k: 0,
            eta: f64::INFINITY,
        });
    }
    Ok(total.sqrt())
}

/// Plancherel lattice norm `(Σ_k Δη Σ_j |f̂|²)^{1/2}`.
pub fn l2_norm(field: &SpectralField, component: Component) -> f64 {
    let l = field.lattice();
    let sum: f64 = field
        .component(component)
        .iter()
        .map(|c| c.norm_sqr())
        .sum();
    (sum * l.eta_spacing).sqrt()
}

/// `H^order` lattice norm, weight `(1 + k² + η²)^{order}` on `|f̂|²`.
pub fn sobolev_norm(field: &SpectralField, component: Component, order: f64) -> f64 {
    let l = field.lattice();
    let sum: f64 = l
        .points()
        .zip(field.component(component).iter())
        .map(|((k, j), c)| {
            let kf = k as f64;
            let eta = l.eta(j);
            (1.0 + kf * kf + eta * eta).powf(order) * c.norm_sqr()
        })
        .sum();
    (sum * l.eta_spacing).sqrt()
}
