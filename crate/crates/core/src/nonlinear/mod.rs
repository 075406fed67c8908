//! Pseudo-spectral solver for the full Boussinesq perturbation system in the
//! shearing frame `z = x − yt`, on the periodic box `[0, 2π) × [0, Ly)`.
//!
//! In moving coordinates, with `∇_L = (∂_z, ∂_y − t ∂_z)` and `Δ_L Ψ = Ω`,
//!
//! ```text
//! ∂_t Ω + U·∇_L Ω = −β² ∂_z Θ + ν Δ_L Ω
//! ∂_t Θ + U·∇_L Θ = U^y + κ Δ_L Θ,         U = ∇_L^⊥ Ψ
//! ```
//!
//! The linear part is diagonal per mode except for the `β²`/`U^y` coupling;
//! products are formed on the grid and truncated by the 2/3 rule. Time stepping
//! is classical RK4, with dissipation absorbed into exact integrating factors
//! (Lawson form).
//!
//! Coefficients are stored normalized (`ĉ = FFT(f)/(Nx Ny)`) in FFT order on a
//! row-major `Ny × Nx` table: row `l` carries `η = j Δη` with `j` the signed
//! index of `l`, column `i` carries the signed `k`. After a remesh by `n`
//! cells, stored index `j` on row `k` stands for `η = (j + k n) Δη`; the
//! shear then enters only through `t_eff = t − n Δη`.

pub mod grid;
pub mod snapshot;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::diagnostics::NormSeries;
use crate::error::{Error, Result};
use crate::spectral::{Lattice, PhysicalParams, SpectralField};
use grid::Grid2;
use snapshot::Snapshot;

/// Horizontal period.
pub const LX: f64 = 2.0 * PI;
/// CFL bound on `dt · (advective symbol)`.
pub const CFL_BOUND: f64 = 0.5;
/// Energy fraction dropped by a remesh above which a warning is recorded.
pub const REMESH_WARN_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nx: usize,
    pub ny: usize,
    pub ly: f64,
    pub params: PhysicalParams,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    /// Remesh once `|t_eff|` exceeds this; `f64::INFINITY` disables remeshing.
    pub remesh_threshold: f64,
    pub nonlinear: bool,
    /// Amplitude of the initial density blob.
    pub eps: f64,
    /// Gaussian width of the initial density blob.
    pub blob_width: f64,
    /// Steps between emitted norm samples.
    pub output_every: usize,
    /// Steps between snapshots handed to the sink, if any.
    pub snapshot_every: Option<usize>,
}

impl SimConfig {
    /// Zero vorticity and a Gaussian density blob on a 128 × 256 box with `Ly = 4π`.
    pub fn gaussian_blob(eps: f64, nonlinear: bool) -> Self {
        Self {
            nx: 128,
            ny: 256,
            ly: 4.0 * PI,
            params: PhysicalParams {
                beta: 2.0,
                nu: 0.0,
                kappa: 0.0,
            },
            dt: 0.05,
            t_end: 50.0,
            dealias_fraction: 2.0 / 3.0,
            remesh_threshold: f64::INFINITY,
            nonlinear,
            eps,
            blob_width: 1.0,
            output_every: 10,
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !self.nx.is_power_of_two() || !self.ny.is_power_of_two() || self.nx < 8 || self.ny < 8 {
            return bad(format!(
                "grid ({}, {}) must be powers of two >= 8",
                self.nx, self.ny
            ));
        }
        if !(self.ly > 0.0 && self.ly.is_finite()) {
            return bad("ly must be > 0".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0".into());
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be >= 0".into());
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            ));
        }
        if !(self.dealias_fraction > 0.5 && self.dealias_fraction < 1.0) {
            return bad("dealias_fraction must lie in (1/2, 1)".into());
        }
        if !(self.remesh_threshold > 0.0) {
            return bad("remesh_threshold must be > 0".into());
        }
        if self.output_every == 0 || self.snapshot_every == Some(0) {
            return bad("output_every and snapshot_every must be >= 1".into());
        }
        if !(self.blob_width > 0.0) || !self.eps.is_finite() {
            return bad("blob_width must be > 0 and eps finite".into());
        }
        PhysicalParams::new(self.params.beta, self.params.nu, self.params.kappa)?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn eta_spacing(&self) -> f64 {
        2.0 * PI / self.ly
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub nx: usize,
    pub ny: usize,
    pub ly: f64,
    pub omega: Vec<Complex64>,
    pub theta: Vec<Complex64>,
    pub t: f64,
    pub remesh_count: usize,
    /// Integer `n` of the current remesh offset `n Δη`.
    pub frame_shift: i64,
    /// `∫₀ᵗ u₀(τ, y_l) dτ` on the grid rows, `u₀` the x-average of `u^x`.
    pub u0_integral: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SimState {
    pub fn eta_spacing(&self) -> f64 {
        2.0 * PI / self.ly
    }

    /// Shear time seen by the stored indices.
    pub fn t_eff(&self) -> f64 {
        self.t - self.frame_shift as f64 * self.eta_spacing()
    }

    fn idx(&self, k: i64, j: i64) -> usize {
        Grid2::index_of(j, self.ny) * self.nx + Grid2::index_of(k, self.nx)
    }

    /// Coefficients `(Ω̂, Θ̂)` at stored indices `(k, j)`.
    pub fn coefficient(&self, k: i64, j: i64) -> (Complex64, Complex64) {
        let i = self.idx(k, j);
        (self.omega[i], self.theta[i])
    }

    /// Sets `(k, j)` and its conjugate partner `(−k, −j)`.
    pub fn set_mode(&mut self, k: i64, j: i64, omega: Complex64, theta: Complex64) {
        let a = self.idx(k, j);
        let b = self.idx(-k, -j);
        self.omega[a] = omega;
        self.theta[a] = theta;
        self.omega[b] = omega.conj();
        self.theta[b] = theta.conj();
    }

    /// Stored coefficients as a lattice field with `k_max = Nx/2 − 1`,
    /// `j_max = Ny/2 − 1` and spacing `Δη` (stored indices, see module docs).
    pub fn spectral(&self) -> SpectralField {
        let lattice = Lattice::new(self.nx / 2 - 1, self.ny / 2 - 1, self.eta_spacing())
            .expect("positive spacing");
        SpectralField::from_fn(lattice, |k, eta| {
            let j = (eta / self.eta_spacing()).round() as i64;
            self.coefficient(k, j)
        })
    }
}

/// L² norms over the box, plus energy and means.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimNorms {
    pub t: f64,
    pub theta: f64,
    pub ux: f64,
    pub uy: f64,
    pub omega: f64,
    pub grad_theta: f64,
    pub energy: f64,
    pub mean_omega: f64,
    pub mean_theta: f64,
}

impl SimNorms {
    pub const LABELS: [&'static str; 9] = [
        "theta_neq",
        "ux_neq",
        "uy",
        "omega_neq",
        "grad_theta_neq",
        "energy",
        "mean_omega",
        "mean_theta",
        "omega_l2",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// `H = ½∫(|u|² + β²θ²)`.
    pub h: f64,
    /// `dH/dt` along the semi-discrete flow at the current state.
    pub dh_dt: f64,
    /// `−∫ u^x u^y`.
    pub reynolds_stress: f64,
    /// `∫(ν|∇u|² + κβ²|∇θ|²)`, zero in inviscid runs.
    pub dissipation: f64,
}

impl EnergyBalance {
    /// `|dH/dt − (−∫u^x u^y − D)|`.
    pub fn defect(&self) -> f64 {
        (self.dh_dt - (self.reynolds_stress - self.dissipation)).abs()
    }
}

struct Rhs {
    omega: Vec<Complex64>,
    theta: Vec<Complex64>,
    /// Largest advective symbol `max|U^x − t U^y|·k_cut + max|U^y|·(η_cut + ...)`.
    speed: f64,
}

/// Owns transform plans and lattice tables for one configuration.
pub struct Solver {
    cfg: SimConfig,
    grid: Grid2,
    k_of: Vec<f64>,
    j_of: Vec<f64>,
    keep: Vec<bool>,
    k_cut: i64,
    j_cut: i64,
}

impl Solver {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let (nx, ny) = (cfg.nx, cfg.ny);
        let k_cut = (cfg.dealias_fraction * nx as f64 / 2.0).floor() as i64;
        let j_cut = (cfg.dealias_fraction * ny as f64 / 2.0).floor() as i64;
        let k_of: Vec<f64> = (0..nx).map(|i| Grid2::signed(i, nx) as f64).collect();
        let j_of: Vec<f64> = (0..ny).map(|l| Grid2::signed(l, ny) as f64).collect();
        let mut keep = vec![false; nx * ny];
        for l in 0..ny {
            for i in 0..nx {
                let (k, j) = (Grid2::signed(i, nx), Grid2::signed(l, ny));
                keep[l * nx + i] = k.abs() <= k_cut && j.abs() <= j_cut;
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            grid: Grid2::new(nx, ny),
            k_of,
            j_of,
            keep,
            k_cut,
            j_cut,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn zero_state(&self) -> SimState {
        let n = self.grid.len();
        SimState {
            nx: self.cfg.nx,
            ny: self.cfg.ny,
            ly: self.cfg.ly,
            omega: vec![Complex64::new(0.0, 0.0); n],
            theta: vec![Complex64::new(0.0, 0.0); n],
            t: 0.0,
            remesh_count: 0,
            frame_shift: 0,
            u0_integral: vec![0.0; self.cfg.ny],
            warnings: Vec::new(),
        }
    }

    /// Grid coordinates `(x_i, y_l)`.
    pub fn coordinates(&self) -> (Vec<f64>, Vec<f64>) {
        let x = (0..self.cfg.nx)
            .map(|i| LX * i as f64 / self.cfg.nx as f64)
            .collect();
        let y = (0..self.cfg.ny)
            .map(|l| self.cfg.ly * l as f64 / self.cfg.ny as f64)
            .collect();
        (x, y)
    }

    /// State at `t = 0` from real grid values (row-major, rows are `y`), dealiased.
    pub fn state_from_physical(&self, omega: &[f64], theta: &[f64]) -> Result<SimState> {
        let n = self.grid.len();
        if omega.len() != n || theta.len() != n {
            return Err(Error::InvalidInput(format!(
                "physical fields must have {n} values"
            )));
        }
        let mut s = self.zero_state();
        for (dst, src) in [(&mut s.omega, omega), (&mut s.theta, theta)] {
            let mut buf: Vec<Complex64> = src.iter().map(|v| Complex64::new(*v, 0.0)).collect();
            self.grid.forward(&mut buf);
            for (i, c) in buf.iter().enumerate() {
                dst[i] = if self.keep[i] {
                    c / n as f64
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        }
        Ok(s)
    }

    /// Zero vorticity, `θ = ε exp(−|x − x_c|²/(2w²))` centred in the box, periodized.
    pub fn initial_state(&self) -> SimState {
        let (xs, ys) = self.coordinates();
        let (xc, yc) = (PI, self.cfg.ly / 2.0);
        let w2 = 2.0 * self.cfg.blob_width * self.cfg.blob_width;
        let mut theta = vec![0.0; self.grid.len()];
        for (l, y) in ys.iter().enumerate() {
            for (i, x) in xs.iter().enumerate() {
                let mut v = 0.0;
                for mx in -2..=2 {
                    for my in -2..=2 {
                        let dx = x - xc + mx as f64 * LX;
                        let dy = y - yc + my as f64 * self.cfg.ly;
                        v += (-(dx * dx + dy * dy) / w2).exp();
                    }
                }
                theta[l * self.cfg.nx + i] = self.cfg.eps * v;
            }
        }
        let omega = vec![0.0; self.grid.len()];
        self.state_from_physical(&omega, &theta)
            .expect("sizes match")
    }

    fn symbols(&self, idx: usize, t_eff: f64) -> (f64, f64, f64) {
        let i = idx % self.cfg.nx;
        let l = idx / self.cfg.nx;
        let k = self.k_of[i];
        let ky = self.j_of[l] * self.cfg.eta_spacing() - k * t_eff;
        (k, ky, k * k + ky * ky)
    }

    /// Velocity coefficients `(Û^x, Û^y)`; zero for the mean mode.
    fn velocity(&self, om: Complex64, k: f64, ky: f64, p: f64) -> (Complex64, Complex64) {
        if p == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        (
            Complex64::new(0.0, ky / p) * om,
            Complex64::new(0.0, -k / p) * om,
        )
    }

    /// Right-hand side without dissipation.
    fn rhs(&self, om: &[Complex64], th: &[Complex64], t_eff: f64) -> Rhs {
        let n = self.grid.len();
        let beta_sq = self.cfg.params.beta * self.cfg.params.beta;
        let i = Complex64::i();
        let mut d_om = vec![Complex64::new(0.0, 0.0); n];
        let mut d_th = vec![Complex64::new(0.0, 0.0); n];
        let mut speed = 0.0;

        if self.cfg.nonlinear {
            let mut vel = vec![Complex64::new(0.0, 0.0); n];
            let mut grad_om = vec![Complex64::new(0.0, 0.0); n];
            let mut grad_th = vec![Complex64::new(0.0, 0.0); n];
            for idx in 0..n {
                if !self.keep[idx] {
                    continue;
                }
                let (k, ky, p) = self.symbols(idx, t_eff);
                let (ux, uy) = self.velocity(om[idx], k, ky, p);
                // two real fields per complex transform: f + i g
                vel[idx] = ux + i * uy;
                grad_om[idx] = i * k * om[idx] + i * (i * ky * om[idx]);
                grad_th[idx] = i * k * th[idx] + i * (i * ky * th[idx]);
            }
            self.grid.inverse(&mut vel);
            self.grid.inverse(&mut grad_om);
            self.grid.inverse(&mut grad_th);
            let (mut max_ux_eff, mut max_uy) = (0.0f64, 0.0f64);
            let mut prod = vec![Complex64::new(0.0, 0.0); n];
            for idx in 0..n {
                let (ux, uy) = (vel[idx].re, vel[idx].im);
                let n_om = -(ux * grad_om[idx].re + uy * grad_om[idx].im);
                let n_th = -(ux * grad_th[idx].re + uy * grad_th[idx].im);
                prod[idx] = Complex64::new(n_om, n_th);
                max_ux_eff = max_ux_eff.max((ux - t_eff * uy).abs());
                max_uy = max_uy.max(uy.abs());
            }
            speed = max_ux_eff * self.k_cut as f64
                + max_uy * self.j_cut as f64 * self.cfg.eta_spacing();
            self.grid.forward(&mut prod);
            let norm = 1.0 / n as f64;
            for l in 0..self.cfg.ny {
                for col in 0..self.cfg.nx {
                    let idx = l * self.cfg.nx + col;
                    if !self.keep[idx] {
                        continue;
                    }
                    let mirror = ((self.cfg.ny - l) % self.cfg.ny) * self.cfg.nx
                        + (self.cfg.nx - col) % self.cfg.nx;
                    let a = prod[idx];
                    let b = prod[mirror].conj();
                    d_om[idx] = (a + b) * 0.5 * norm;
                    d_th[idx] = (a - b) * Complex64::new(0.0, -0.5) * norm;
                }
            }
        }

        for idx in 0..n {
            if !self.keep[idx] {
                continue;
            }
            let (k, ky, p) = self.symbols(idx, t_eff);
            let (_, uy) = self.velocity(om[idx], k, ky, p);
            d_om[idx] += Complex64::new(0.0, -beta_sq * k) * th[idx];
            d_th[idx] += uy;
        }
        Rhs {
            omega: d_om,
            theta: d_th,
            speed,
        }
    }

    /// `∫_{a}^{b} p dτ` for one mode, `a, b` effective times.
    fn integrated_p(&self, idx: usize, a: f64, b: f64) -> f64 {
        let (k, _, _) = self.symbols(idx, 0.0);
        let eta = self.j_of[idx / self.cfg.nx] * self.cfg.eta_spacing();
        if k == 0.0 {
            return eta * eta * (b - a);
        }
        k * k * (b - a) + ((eta - k * a).powi(3) - (eta - k * b).powi(3)) / (3.0 * k)
    }

    /// Integrating factors `(E_ν, E_κ)` from effective time `a` to `b`.
    fn factors(&self, a: f64, b: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let (nu, kappa) = (self.cfg.params.nu, self.cfg.params.kappa);
        if nu == 0.0 && kappa == 0.0 {
            return None;
        }
        let n = self.grid.len();
        let mut en = vec![1.0; n];
        let mut ek = vec![1.0; n];
        for idx in 0..n {
            if self.keep[idx] {
                let ip = self.integrated_p(idx, a, b);
                en[idx] = (-nu * ip).exp();
                ek[idx] = (-kappa * ip).exp();
            }
        }
        Some((en, ek))
    }

    /// One RK4 step of size `cfg.dt` (Lawson form when dissipative).
    pub fn step(&self, s: &SimState) -> Result<SimState> {
        let h = self.cfg.dt;
        let t0 = s.t_eff();
        let th_ = t0 + 0.5 * h;
        let t1 = t0 + h;
        let n = self.grid.len();
        let fa = self.factors(t0, th_);
        let fb = self.factors(th_, t1);
        let apply =
            |f: &Option<(Vec<f64>, Vec<f64>)>, v: &[Complex64], which: usize| -> Vec<Complex64> {
                match f {
                    None => v.to_vec(),
                    Some(pair) => {
                        let e = if which == 0 { &pair.0 } else { &pair.1 };
                        v.iter().zip(e).map(|(c, e)| c * e).collect()
                    }
                }
            };
        let combo = |a: &[Complex64], terms: &[(f64, &[Complex64])]| -> Vec<Complex64> {
            let mut out = a.to_vec();
            for (c, v) in terms {
                for (o, x) in out.iter_mut().zip(v.iter()) {
                    *o += x * *c;
                }
            }
            out
        };

        let k1 = self.rhs(&s.omega, &s.theta, t0);
        if self.cfg.nonlinear && h * k1.speed >= CFL_BOUND {
            return Err(Error::TimeStepTooLarge {
                dt: h,
                suggested: 0.9 * CFL_BOUND / k1.speed,
            });
        }
        // stage 2: E_a (y + h/2 k1)
        let y2o = apply(&fa, &combo(&s.omega, &[(0.5 * h, &k1.omega)]), 0);
        let y2t = apply(&fa, &combo(&s.theta, &[(0.5 * h, &k1.theta)]), 1);
        let k2 = self.rhs(&y2o, &y2t, th_);
        // stage 3: E_a y + h/2 k2
        let eyo = apply(&fa, &s.omega, 0);
        let eyt = apply(&fa, &s.theta, 1);
        let y3o = combo(&eyo, &[(0.5 * h, &k2.omega)]);
        let y3t = combo(&eyt, &[(0.5 * h, &k2.theta)]);
        let k3 = self.rhs(&y3o, &y3t, th_);
        // stage 4: E_b (E_a y + h k3)
        let y4o = apply(&fb, &combo(&eyo, &[(h, &k3.omega)]), 0);
        let y4t = apply(&fb, &combo(&eyt, &[(h, &k3.theta)]), 1);
        let k4 = self.rhs(&y4o, &y4t, t1);
        // y_new = E_b[E_a (y + h/6 k1) + h/3 (k2 + k3)] + h/6 k4
        let inner_o = combo(
            &apply(&fa, &combo(&s.omega, &[(h / 6.0, &k1.omega)]), 0),
            &[(h / 3.0, &k2.omega), (h / 3.0, &k3.omega)],
        );
        let inner_t = combo(
            &apply(&fa, &combo(&s.theta, &[(h / 6.0, &k1.theta)]), 1),
            &[(h / 3.0, &k2.theta), (h / 3.0, &k3.theta)],
        );
        let omega = combo(&apply(&fb, &inner_o, 0), &[(h / 6.0, &k4.omega)]);
        let theta = combo(&apply(&fb, &inner_t, 1), &[(h / 6.0, &k4.theta)]);
        debug_assert_eq!(omega.len(), n);

        let mut next = SimState {
            omega,
            theta,
            t: s.t + h,
            ..s.clone()
        };
        let u0_before = self.mean_flow(s);
        let u0_after = self.mean_flow(&next);
        for (acc, (a, b)) in next
            .u0_integral
            .iter_mut()
            .zip(u0_before.iter().zip(&u0_after))
        {
            *acc += 0.5 * h * (a + b);
        }
        Ok(next)
    }

    /// `u₀(y_l)`, the x-average of `u^x`, on the grid rows.
    pub fn mean_flow(&self, s: &SimState) -> Vec<f64> {
        let ny = self.cfg.ny;
        let mut col: Vec<Complex64> = (0..ny)
            .map(|l| {
                let idx = l * self.cfg.nx;
                let eta = self.j_of[l] * self.cfg.eta_spacing();
                if eta == 0.0 || !self.keep[idx] {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, 1.0 / eta) * s.omega[idx]
                }
            })
            .collect();
        self.grid.inverse_column(&mut col);
        col.iter().map(|c| c.re).collect()
    }

    pub fn norms(&self, s: &SimState) -> SimNorms {
        let area = LX * self.cfg.ly;
        let beta_sq = self.cfg.params.beta * self.cfg.params.beta;
        let t_eff = s.t_eff();
        let mut acc = [0.0f64; 6];
        for idx in 0..self.grid.len() {
            if !self.keep[idx] {
                continue;
            }
            let (k, ky, p) = self.symbols(idx, t_eff);
            let om2 = s.omega[idx].norm_sqr();
            let th2 = s.theta[idx].norm_sqr();
            if p > 0.0 {
                acc[5] += om2 / p + beta_sq * th2;
            }
            if k == 0.0 {
                continue;
            }
            acc[0] += th2;
            acc[1] += ky * ky * om2 / (p * p);
            acc[2] += k * k * om2 / (p * p);
            acc[3] += om2;
            acc[4] += p * th2;
        }
        let l2 = |v: f64| (area * v).sqrt();
        SimNorms {
            t: s.t,
            theta: l2(acc[0]),
            ux: l2(acc[1]),
            uy: l2(acc[2]),
            omega: l2(acc[3]),
            grad_theta: l2(acc[4]),
            energy: 0.5 * area * acc[5],
            mean_omega: area * s.omega[0].re,
            mean_theta: area * s.theta[0].re,
        }
    }

    pub fn energy_balance(&self, s: &SimState) -> EnergyBalance {
        let area = LX * self.cfg.ly;
        let (nu, kappa) = (self.cfg.params.nu, self.cfg.params.kappa);
        let beta_sq = self.cfg.params.beta * self.cfg.params.beta;
        let t_eff = s.t_eff();
        let r = self.rhs(&s.omega, &s.theta, t_eff);
        let (mut h, mut dh, mut rs, mut diss) = (0.0, 0.0, 0.0, 0.0);
        for idx in 0..self.grid.len() {
            if !self.keep[idx] {
                continue;
            }
            let (k, ky, p) = self.symbols(idx, t_eff);
            let om = s.omega[idx];
            let th = s.theta[idx];
            if p > 0.0 {
                h += om.norm_sqr() / p;
                // ½ d/dt (|Ω|²/p) with ∂ₜp = −2k k_y
                dh += (om.conj() * r.omega[idx]).re / p + om.norm_sqr() * k * ky / (p * p);
                let (ux, uy) = self.velocity(om, k, ky, p);
                rs -= (ux * uy.conj()).re;
                diss += nu * om.norm_sqr();
            }
            h += beta_sq * th.norm_sqr();
            dh += beta_sq * (th.conj() * r.theta[idx]).re;
            diss += kappa * beta_sq * p * th.norm_sqr();
        }
        // dissipation enters dH/dt as −D
        EnergyBalance {
            h: 0.5 * area * h,
            dh_dt: area * (dh - diss),
            reynolds_stress: area * rs,
            dissipation: area * diss,
        }
    }

    /// Static-frame grid values of `ω` and `θ` at the state's time.
    pub fn snapshot(&self, s: &SimState) -> Snapshot {
        let (nx, ny) = (self.cfg.nx, self.cfg.ny);
        let (_, ys) = self.coordinates();
        let t_eff = s.t_eff();
        let to_static = |coeffs: &[Complex64]| -> Vec<f64> {
            let mut buf = coeffs.to_vec();
            self.grid.inverse_columns(&mut buf);
            for (l, y) in ys.iter().enumerate() {
                for i in 0..nx {
                    let k = self.k_of[i];
                    buf[l * nx + i] *= Complex64::from_polar(1.0, -k * t_eff * y);
                }
            }
            self.grid.inverse_rows(&mut buf);
            buf.iter().map(|c| c.re).collect()
        };
        Snapshot {
            nx,
            ny,
            t: s.t,
            beta: self.cfg.params.beta,
            nu: self.cfg.params.nu,
            kappa: self.cfg.params.kappa,
            omega: to_static(&s.omega),
            theta: to_static(&s.theta),
        }
    }

    pub fn remesh(&self, s: &SimState) -> SimState {
        remesh_with_cut(s, self.j_cut)
    }
}

/// Advances `state` by one step of `cfg.dt`.
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<SimState> {
    Solver::new(cfg)?.step(state)
}

/// Re-centres the stored `η` band so that `t_eff` is as close to zero as a
/// whole number of cells allows.
///
/// Coefficients shifted beyond `|j| ≤ Ny/3` are dropped; if they carried more
/// than [`REMESH_WARN_FRACTION`] of the squared norm a warning is recorded.
pub fn remesh(state: &SimState) -> SimState {
    remesh_with_cut(state, (state.ny / 3) as i64)
}

fn remesh_with_cut(state: &SimState, j_cut: i64) -> SimState {
    let target = (state.t / state.eta_spacing()).round() as i64;
    let shift = target - state.frame_shift;
    if shift == 0 {
        return state.clone();
    }
    let (nx, ny) = (state.nx, state.ny);
    let mut out = state.clone();
    out.omega
        .iter_mut()
        .for_each(|c| *c = Complex64::new(0.0, 0.0));
    out.theta
        .iter_mut()
        .for_each(|c| *c = Complex64::new(0.0, 0.0));
    let (mut total, mut lost) = (0.0, 0.0);
    for l in 0..ny {
        for i in 0..nx {
            let idx = l * nx + i;
            let (k, j) = (Grid2::signed(i, nx), Grid2::signed(l, ny));
            let e = state.omega[idx].norm_sqr() + state.theta[idx].norm_sqr();
            total += e;
            let j_new = j - k * shift;
            if j_new.abs() > j_cut || j_new.abs() >= (ny / 2) as i64 {
                lost += e;
                continue;
            }
            let dst = Grid2::index_of(j_new, ny) * nx + i;
            out.omega[dst] = state.omega[idx];
            out.theta[dst] = state.theta[idx];
        }
    }
    out.frame_shift = target;
    out.remesh_count += 1;
    if total > 0.0 && lost / total > REMESH_WARN_FRACTION {
        out.warnings.push(format!(
            "remesh at t = {} dropped {:.3e} of the squared norm",
            state.t,
            lost / total
        ));
    }
    out
}

/// Profile `v(t, y) = y + (1/t) ∫₀ᵗ u₀(τ, y) dτ` on the grid rows, and
/// whether it differs from `y` at all.
pub fn nonlinear_frame(state: &SimState) -> (Vec<f64>, bool) {
    let dy = state.ly / state.ny as f64;
    let ys = (0..state.ny).map(|l| l as f64 * dy);
    if state.t <= 0.0 {
        return (ys.collect(), false);
    }
    let v: Vec<f64> = ys
        .zip(&state.u0_integral)
        .map(|(y, i)| y + i / state.t)
        .collect();
    let shifted = state.u0_integral.iter().any(|i| *i != 0.0);
    (v, shifted)
}

/// Energy budget of `state` under `cfg`.
pub fn energy_balance(state: &SimState, cfg: &SimConfig) -> Result<EnergyBalance> {
    Ok(Solver::new(cfg)?.energy_balance(state))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: Vec<NormSeries>,
    pub final_state: SimState,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn series(&self, label: &str) -> Option<&NormSeries> {
        self.series.iter().find(|s| s.label == label)
    }
}

/// Labels emitted by [`run`], in order.
pub const RUN_LABELS: [&str; 11] = [
    "theta_neq",
    "ux_neq",
    "uy",
    "omega_neq",
    "grad_theta_neq",
    "energy",
    "dH_dt",
    "reynolds_stress",
    "dissipation",
    "mean_omega",
    "mean_theta",
];

/// Time-steps the Gaussian-blob initial data of `cfg` to `t_end`, emitting norm
/// series every `output_every` steps; snapshots go to `sink`.
pub fn run<F>(cfg: &SimConfig, mut sink: F) -> Result<RunOutput>
where
    F: FnMut(&Snapshot) -> Result<()>,
{
    let solver = Solver::new(cfg)?;
    let state = solver.initial_state();
    run_from(&solver, state, &mut sink)
}

/// Like [`run`] from an arbitrary initial state.
pub fn run_from<F>(solver: &Solver, mut state: SimState, sink: &mut F) -> Result<RunOutput>
where
    F: FnMut(&Snapshot) -> Result<()>,
{
    let cfg = solver.config().clone();
    let mut series: Vec<NormSeries> = RUN_LABELS.iter().map(|l| NormSeries::new(*l)).collect();
    let mut record = |s: &SimState| -> Result<()> {
        let n = solver.norms(s);
        let e = solver.energy_balance(s);
        let values = [
            n.theta,
            n.ux,
            n.uy,
            n.omega,
            n.grad_theta,
            n.energy,
            e.dh_dt,
            e.reynolds_stress,
            e.dissipation,
            n.mean_omega,
            n.mean_theta,
        ];
        for (ser, v) in series.iter_mut().zip(values) {
            ser.push(s.t, v)?;
        }
        Ok(())
    };
    record(&state)?;
    if cfg.snapshot_every.is_some() {
        sink(&solver.snapshot(&state))?;
    }
    let t_start = state.t;
    for n in 1..=cfg.n_steps() {
        if state.t_eff().abs() > cfg.remesh_threshold {
            state = solver.remesh(&state);
        }
        state = solver.step(&state)?;
        state.t = t_start + n as f64 * cfg.dt;
        if n % cfg.output_every == 0 || n == cfg.n_steps() {
            record(&state)?;
        }
        if cfg.snapshot_every.is_some_and(|every| n % every == 0) {
            sink(&solver.snapshot(&state))?;
        }
    }
    let warnings = state.warnings.clone();
    Ok(RunOutput {
        series,
        final_state: state,
        warnings,
    })
}
