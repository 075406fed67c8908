//! Normal-mode stability of stratified shear flows in a channel with
//! impermeable walls: the Rayleigh–Taylor dispersion relation for a fluid at
//! rest, and the Taylor–Goldstein eigenproblem for a general profile `U(y)`.
//!
//! Taylor–Goldstein is discretized after the substitution `u = γ^{1/2} v`,
//! `γ = s + ikU`, which turns it into
//!
//! ```text
//! −γ(γ v')' + k²γ² v + (ik/2) U'' γ v + k² (β² − U'²/4) v = 0,
//! ```
//!
//! a quadratic eigenvalue problem in `s` with tridiagonal coefficients once the
//! flux `(γ v')'` is differenced in conservative form. Writing `s = iμ` makes all
//! three coefficients real, and the real companion matrix is handed to a Schur
//! solver. Eigenvectors come from inverse iteration on the tridiagonal pencil.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Residual below which an eigenpair counts as resolved.
pub const RESIDUAL_THRESHOLD: f64 = 1e-2;
/// Relative part of `stability_tol = STABILITY_REL_TOL · spectral radius`.
pub const STABILITY_REL_TOL: f64 = 1e-6;

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Background velocity `U(y)` with its first two derivatives on `[y_lo, y_hi]`.
pub struct ShearProfile {
    pub u: RealFn,
    pub du: RealFn,
    pub d2u: RealFn,
    pub y_range: (f64, f64),
    pub description: String,
}

impl std::fmt::Debug for ShearProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShearProfile")
            .field("y_range", &self.y_range)
            .field("description", &self.description)
            .finish()
    }
}

impl ShearProfile {
    pub fn new(
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        y_range: (f64, f64),
        description: impl Into<String>,
    ) -> Self {
        Self {
            u: Box::new(u),
            du: Box::new(du),
            d2u: Box::new(d2u),
            y_range,
            description: description.into(),
        }
    }

    /// `U(y) = slope · y`.
    pub fn linear(slope: f64, y_range: (f64, f64)) -> Self {
        Self::new(
            move |y| slope * y,
            move |_| slope,
            |_| 0.0,
            y_range,
            format!("linear shear U = {slope} y"),
        )
    }

    /// Couette flow `U(y) = y` on `[−1, 1]`.
    pub fn couette() -> Self {
        Self::linear(1.0, (-1.0, 1.0))
    }

    /// Fluid at rest, `U ≡ 0`.
    pub fn rest(y_range: (f64, f64)) -> Self {
        Self::new(|_| 0.0, |_| 0.0, |_| 0.0, y_range, "rest")
    }

    /// Hyperbolic-tangent mixing layer `U(y) = tanh(y/d)`.
    pub fn tanh(thickness: f64, y_range: (f64, f64)) -> Self {
        let d = thickness;
        Self::new(
            move |y| (y / d).tanh(),
            move |y| 1.0 / (d * (y / d).cosh().powi(2)),
            move |y| -2.0 * (y / d).tanh() / (d * d * (y / d).cosh().powi(2)),
            y_range,
            format!("tanh mixing layer, thickness {d}"),
        )
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.y_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("invalid y_range ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    SpectrallyStable,
    SpectrallyUnstable,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SpectrallyStable => "spectrally_stable",
            Self::SpectrallyUnstable => "spectrally_unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub n_grid: usize,
    pub classification: Classification,
    pub stability_tol: f64,
    /// Largest `Re s` among the eigenvalues that entered the classification.
    pub max_growth: f64,
    /// Largest `Re s` over every computed eigenvalue, resolved or not.
    pub max_growth_all: f64,
    /// Whether each eigenvalue entered the classification.
    pub classified: Vec<bool>,
}

impl EigenResult {
    fn classify(
        eigenvalues: Vec<Complex64>,
        residuals: Vec<f64>,
        classified: Vec<bool>,
        n_grid: usize,
    ) -> Self {
        let radius = eigenvalues.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let stability_tol = STABILITY_REL_TOL * radius;
        let max_growth = eigenvalues
            .iter()
            .zip(&classified)
            .filter(|(_, c)| **c)
            .map(|(s, _)| s.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_growth_all = eigenvalues
            .iter()
            .map(|s| s.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let classification = if max_growth > stability_tol {
            Classification::SpectrallyUnstable
        } else {
            Classification::SpectrallyStable
        };
        Self {
            eigenvalues,
            residuals,
            n_grid,
            classification,
            stability_tol,
            max_growth,
            max_growth_all,
            classified,
        }
    }

    /// The eigenvalue with the largest real part among the classified ones.
    pub fn most_unstable(&self) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .zip(&self.classified)
            .filter(|(_, c)| **c)
            .map(|(s, _)| *s)
            .max_by(|a, b| a.re.total_cmp(&b.re))
    }
}

/// Closed-form Rayleigh–Taylor spectrum `s_n² = −β²k²/(k² + (nπ/H)²)`, both roots
/// per `n`, with a second-order finite-difference cross-check.
///
/// `residuals[i]` is the relative gap between the analytic eigenvalue and the
/// one obtained from the discretized Dirichlet Laplacian on `n_grid` points.
pub fn rayleigh_taylor_spectrum(
    beta_sq: f64,
    k: i64,
    height: f64,
    n_modes: usize,
) -> Result<EigenResult> {
    rayleigh_taylor_spectrum_with_grid(beta_sq, k, height, n_modes, 512)
}

pub fn rayleigh_taylor_spectrum_with_grid(
    beta_sq: f64,
    k: i64,
    height: f64,
    n_modes: usize,
    n_grid: usize,
) -> Result<EigenResult> {
    if k == 0 || !(height > 0.0) || n_modes == 0 || n_grid < n_modes {
        return Err(Error::InvalidInput(
            "rayleigh-taylor needs k != 0, height > 0, 1 <= n_modes <= n_grid".into(),
        ));
    }
    let kf = k as f64;
    let h = height / (n_grid + 1) as f64;
    let lap = DMatrix::<f64>::from_fn(n_grid, n_grid, |i, j| match i.abs_diff(j) {
        0 => 2.0 / (h * h),
        1 => -1.0 / (h * h),
        _ => 0.0,
    });
    let mut disc: Vec<f64> = SymmetricEigen::new(lap)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    disc.sort_by(f64::total_cmp);

    let root = |s_sq: f64| -> Complex64 {
        if s_sq >= 0.0 {
            Complex64::new(s_sq.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-s_sq).sqrt())
        }
    };
    let mut eigenvalues = Vec::with_capacity(2 * n_modes);
    let mut residuals = Vec::with_capacity(2 * n_modes);
    for n in 1..=n_modes {
        let q = n as f64 * std::f64::consts::PI / height;
        let s = root(-beta_sq * kf * kf / (kf * kf + q * q));
        let s_disc = root(-beta_sq * kf * kf / (kf * kf + disc[n - 1]));
        let gap = if s.norm() == 0.0 {
            s_disc.norm()
        } else {
            (s - s_disc).norm() / s.norm()
        };
        eigenvalues.push(s);
        eigenvalues.push(-s);
        residuals.push(gap);
        residuals.push(gap);
    }
    let classified = vec![true; eigenvalues.len()];
    Ok(EigenResult::classify(
        eigenvalues,
        residuals,
        classified,
        n_grid,
    ))
}

/// Complex tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
struct Tridiag<T> {
    sub: Vec<T>,
    diag: Vec<T>,
    sup: Vec<T>,
}

impl Tridiag<f64> {
    fn zeros(n: usize) -> Self {
        Self {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.sup[i];
                m[(i + 1, i)] = self.sub[i];
            }
        }
        m
    }
}

/// Solves a complex tridiagonal system with partial pivoting; `None` if singular.
fn solve_tridiag(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Option<Vec<Complex64>> {
    let n = diag.len();
    // rows carry up to two superdiagonals after pivoting
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    du.push(Complex64::new(0.0, 0.0));
    let mut du2 = vec![Complex64::new(0.0, 0.0); n];
    let mut dl = sub.to_vec();
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if dl[i].norm() > d[i].norm() {
            // swap rows i and i+1
            std::mem::swap(&mut d[i], &mut dl[i]);
            std::mem::swap(&mut du[i], &mut d[i + 1]);
            du2[i] = du[i + 1];
            du[i + 1] = Complex64::new(0.0, 0.0);
            b.swap(i, i + 1);
            let l = dl[i] / d[i];
            d[i + 1] -= l * du[i];
            du[i + 1] -= l * du2[i];
            let bi = b[i];
            b[i + 1] -= l * bi;
        } else {
            if d[i].norm() == 0.0 {
                return None;
            }
            let l = dl[i] / d[i];
            d[i + 1] -= l * du[i];
            let bi = b[i];
            b[i + 1] -= l * bi;
        }
    }
    if d[n - 1].norm() == 0.0 {
        return None;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= du2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct TgOperators {
    n: usize,
    h: f64,
    k: f64,
    beta_sq: f64,
    u: Vec<f64>,
    d2u: Vec<f64>,
    /// Coefficients of `μ² P2 + μ P1 − P0 = 0` with `s = iμ`.
    p2: Tridiag<f64>,
    p1: Tridiag<f64>,
    p0: Tridiag<f64>,
}

impl TgOperators {
    fn build(profile: &ShearProfile, beta_sq: f64, k: i64, n: usize) -> Self {
        let (lo, hi) = profile.y_range;
        let h = (hi - lo) / (n + 1) as f64;
        let kf = k as f64;
        let y: Vec<f64> = (1..=n).map(|i| lo + h * i as f64).collect();
        // U at the half points y_{i ± 1/2}
        let u_half: Vec<f64> = (0..=n)
            .map(|i| (profile.u)(lo + h * (i as f64 + 0.5)))
            .collect();
        let u: Vec<f64> = y.iter().map(|&y| (profile.u)(y)).collect();
        let du: Vec<f64> = y.iter().map(|&y| (profile.du)(y)).collect();
        let d2u: Vec<f64> = y.iter().map(|&y| (profile.d2u)(y)).collect();
        let h2 = h * h;

        let mut p2 = Tridiag::zeros(n);
        let mut p1 = Tridiag::zeros(n);
        let mut p0 = Tridiag::zeros(n);
        for i in 0..n {
            // D2 = second difference; B0 = conservative (U v')'
            let d2 = (-2.0 / h2, 1.0 / h2, 1.0 / h2);
            let b0 = (
                -(u_half[i + 1] + u_half[i]) / h2,
                u_half[i + 1] / h2,
                u_half[i] / h2,
            );
            p2.diag[i] = -d2.0 + kf * kf;
            p1.diag[i] =
                -kf * b0.0 - kf * u[i] * d2.0 + 2.0 * kf.powi(3) * u[i] + 0.5 * kf * d2u[i];
            let p0_diag =
                kf * kf * u[i] * b0.0 - kf.powi(4) * u[i] * u[i] - 0.5 * kf * kf * d2u[i] * u[i]
                    + kf * kf * (beta_sq - 0.25 * du[i] * du[i]);
            p0.diag[i] = p0_diag;
            if i + 1 < n {
                p2.sup[i] = -d2.1;
                p1.sup[i] = -kf * b0.1 - kf * u[i] * d2.1;
                p0.sup[i] = kf * kf * u[i] * b0.1;
            }
            if i > 0 {
                p2.sub[i - 1] = -d2.2;
                p1.sub[i - 1] = -kf * b0.2 - kf * u[i] * d2.2;
                p0.sub[i - 1] = kf * kf * u[i] * b0.2;
            }
        }
        Self {
            n,
            h,
            k: kf,
            beta_sq,
            u,
            d2u,
            p2,
            p1,
            p0,
        }
    }

    /// `T(s) = s² A2 + s A1 + A0` as a complex tridiagonal, with `A1 = i P1`.
    fn pencil(&self, s: Complex64) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let i = Complex64::i();
        let f = |a: f64, b: f64, c: f64| s * s * a + s * i * b + c;
        let sub = (0..self.n - 1)
            .map(|j| f(self.p2.sub[j], self.p1.sub[j], self.p0.sub[j]))
            .collect();
        let diag = (0..self.n)
            .map(|j| f(self.p2.diag[j], self.p1.diag[j], self.p0.diag[j]))
            .collect();
        let sup = (0..self.n - 1)
            .map(|j| f(self.p2.sup[j], self.p1.sup[j], self.p0.sup[j]))
            .collect();
        (sub, diag, sup)
    }

    fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let n = self.n;
        let p2 = self.p2.to_dense();
        let lu = p2.lu();
        let a = lu
            .solve(&self.p0.to_dense())
            .ok_or_else(|| Error::InvalidInput("singular leading coefficient".into()))?;
        let b = lu
            .solve(&self.p1.to_dense())
            .ok_or_else(|| Error::InvalidInput("singular leading coefficient".into()))?;
        let mut comp = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            comp[(i, n + i)] = 1.0;
        }
        comp.view_mut((n, 0), (n, n)).copy_from(&a);
        comp.view_mut((n, n), (n, n)).copy_from(&(-b));
        let mu = comp.complex_eigenvalues();
        Ok(mu.iter().map(|m| Complex64::i() * m).collect())
    }

    /// Eigenvector of `T(s)` by inverse iteration.
    fn eigenvector(&self, s: Complex64) -> Vec<Complex64> {
        let shift = s + Complex64::new(1e-10, 1e-10) * s.norm().max(1.0);
        let (sub, diag, sup) = self.pencil(shift);
        let mut v: Vec<Complex64> = (0..self.n)
            .map(|j| {
                Complex64::new(
                    1.0 + 0.1 * (j as f64 * 0.7).sin(),
                    0.05 * (j as f64 * 1.3).cos(),
                )
            })
            .collect();
        for _ in 0..3 {
            match solve_tridiag(&sub, &diag, &sup, &v) {
                Some(x) => {
                    let nrm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    if nrm == 0.0 || !nrm.is_finite() {
                        break;
                    }
                    v = x.into_iter().map(|c| c / nrm).collect();
                }
                None => break,
            }
        }
        v
    }

    /// Relative residual of the `γ²`-multiplied Taylor–Goldstein equation for
    /// `u = γ^{1/2} v`, evaluated with a fourth-order Dirichlet stencil.
    fn residual(&self, s: Complex64, v: &[Complex64]) -> f64 {
        let n = self.n;
        let ik = Complex64::new(0.0, self.k);
        let gamma: Vec<Complex64> = self.u.iter().map(|&u| s + ik * u).collect();
        let u: Vec<Complex64> = gamma.iter().zip(v).map(|(g, v)| g.sqrt() * v).collect();
        // odd reflection across the walls: u(−h m) = −u(h m)
        let at = |j: i64| -> Complex64 {
            if j == -1 || j == n as i64 {
                Complex64::new(0.0, 0.0)
            } else if j < -1 {
                -u[(-j - 2) as usize]
            } else if j > n as i64 {
                -u[(2 * n as i64 - j) as usize]
            } else {
                u[j as usize]
            }
        };
        let stencil = [
            (-2, -1.0 / 12.0),
            (-1, 4.0 / 3.0),
            (0, -5.0 / 2.0),
            (1, 4.0 / 3.0),
            (2, -1.0 / 12.0),
        ];
        let (mut ra, mut rb, mut rc, mut rt) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let d2: Complex64 = stencil
                .iter()
                .map(|&(off, c)| at(i as i64 + off) * c)
                .sum::<Complex64>()
                / (self.h * self.h);
            let lu = -d2 + u[i] * self.k * self.k;
            let a = gamma[i] * gamma[i] * lu;
            let b = ik * gamma[i] * self.d2u[i] * u[i];
            let c = u[i] * (self.k * self.k * self.beta_sq);
            ra += a.norm_sqr();
            rb += b.norm_sqr();
            rc += c.norm_sqr();
            rt += (a + b + c).norm_sqr();
        }
        let den = ra.sqrt() + rb.sqrt() + rc.sqrt();
        if den == 0.0 {
            return f64::INFINITY;
        }
        rt.sqrt() / den
    }
}

/// Taylor–Goldstein spectrum of `profile` at wavenumber `k` on `n_grid` interior points.
///
/// Eigenpairs with residual below [`RESIDUAL_THRESHOLD`] are classified.
/// Unresolved eigenvalues whose critical layer `U(y_c) = −Im s / k` lies in the
/// channel belong to the discretized continuous spectrum; they are reported
/// but excluded from the classification.
pub fn taylor_goldstein_spectrum(
    profile: &ShearProfile,
    beta_sq: f64,
    k: i64,
    n_grid: usize,
) -> Result<EigenResult> {
    profile.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("taylor-goldstein needs k != 0".into()));
    }
    if n_grid < 64 {
        return Err(Error::InvalidInput("n_grid must be >= 64".into()));
    }
    let ops = TgOperators::build(profile, beta_sq, k, n_grid);
    let eigenvalues = ops.eigenvalues()?;
    let residuals: Vec<f64> = eigenvalues
        .iter()
        .map(|&s| ops.residual(s, &ops.eigenvector(s)))
        .collect();
    let (u_min, u_max) = ops
        .u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| {
            (a.min(u), b.max(u))
        });
    let kf = k as f64;
    let in_continuum = |s: &Complex64| {
        let c = -s.im / kf;
        let slack = 1e-8 * (1.0 + u_max.abs().max(u_min.abs()));
        c >= u_min - slack && c <= u_max + slack
    };
    let classified: Vec<bool> = residuals.iter().map(|r| *r < RESIDUAL_THRESHOLD).collect();
    let any_continuum = eigenvalues
        .iter()
        .zip(&classified)
        .any(|(s, c)| !c && in_continuum(s));
    if !classified.iter().any(|c| *c) && !any_continuum {
        let min_residual = residuals.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::UnresolvedSpectrum { min_residual });
    }
    Ok(EigenResult::classify(
        eigenvalues,
        residuals,
        classified,
        n_grid,
    ))
}

/// Minimum gradient Richardson number `β²/U'(y)²` over `n_samples` points of
/// the channel (inclusive), and whether it exceeds `1/4`.
pub fn richardson_number(profile: &ShearProfile, beta_sq: f64, n_samples: usize) -> (f64, bool) {
    let (lo, hi) = profile.y_range;
    let n = n_samples.max(2);
    let min_ri = (0..n)
        .map(|i| {
            let y = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let du = (profile.du)(y);
            if du == 0.0 {
                // no shear: the sign of the stratification decides
                if beta_sq > 0.0 {
                    f64::INFINITY
                } else if beta_sq < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            } else {
                beta_sq / (du * du)
            }
        })
        .fold(f64::INFINITY, f64::min);
    (min_ri, min_ri > 0.25)
}
