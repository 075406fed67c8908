//! Linearized dynamics around stratified Couette flow, one Fourier mode at a time.
//!
//! In the moving frame `z = x − yt` each mode `(k, η)` obeys
//!
//! ```text
//! Ω̂' = −iβ²k Θ̂ − ν p Ω̂
//! Θ̂' = −(ik/p) Ω̂ − κ p Θ̂,        p = k² + (η − kt)²
//! ```
//!
//! which is integrated directly. The symmetric variables `Z, Q` and the energy
//! `E` are diagnostics on top of the trajectories.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::diagnostics::NormSeries;
use crate::error::{Error, Result};
use crate::ode::{dopri45, radau5, Mat2};
use crate::spectral::{
    symbol_dtp, symbol_p, Lattice, Mode, ModeState, PhysicalParams, SpectralField,
};

/// Default relative tolerance of [`evolve_mode`].
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default relative slack for theorem-bound checks.
pub const DEFAULT_SLACK: f64 = 1e-6;

/// Above this value of `|ν − κ| · max p` the implicit integrator is used.
const STIFFNESS_SWITCH: f64 = 10.0;

/// Symmetrized amplitudes `Z = (p/k²)^{−1/4} Ω̂`, `Q = (p/k²)^{1/4} ikβ Θ̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricState {
    pub z: Complex64,
    pub q: Complex64,
    pub t: f64,
}

impl SymmetricState {
    pub fn zq_sq(&self) -> f64 {
        self.z.norm_sqr() + self.q.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub e: f64,
    pub zq_sq: f64,
    /// Set when `β ≤ 1/2`; `e` is still computed but need not be coercive.
    pub non_coercive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodUnknown {
    pub sigma: Complex64,
}

fn weight(t: f64, m: Mode) -> f64 {
    let k = m.kf();
    (symbol_p(t, m) / (k * k)).powf(0.25)
}

pub fn to_symmetric(s: &ModeState, m: Mode, params: &PhysicalParams) -> Result<SymmetricState> {
    if m.k == 0 {
        return Err(Error::ZeroModeSymmetrization);
    }
    let w = weight(s.t, m);
    let ikb = Complex64::new(0.0, m.kf() * params.beta);
    Ok(SymmetricState {
        z: s.omega / w,
        q: s.theta * ikb * w,
        t: s.t,
    })
}

pub fn from_symmetric(s: &SymmetricState, m: Mode, params: &PhysicalParams) -> Result<ModeState> {
    if m.k == 0 {
        return Err(Error::ZeroModeSymmetrization);
    }
    let w = weight(s.t, m);
    let ikb = Complex64::new(0.0, m.kf() * params.beta);
    Ok(ModeState::new(s.z * w, s.q / (ikb * w), s.t))
}

/// `E = ½[|Z|² + |Q|² + (1/2β)(∂ₜp / (|k| p^{1/2})) Re(Z Q̄)]`.
pub fn energy_e(s: &SymmetricState, m: Mode, params: &PhysicalParams) -> Result<EnergyRecord> {
    if m.k == 0 {
        return Err(Error::ZeroModeSymmetrization);
    }
    let p = symbol_p(s.t, m);
    let mix = symbol_dtp(s.t, m) / (m.kf().abs() * p.sqrt());
    let zq_sq = s.zq_sq();
    let cross = (s.z * s.q.conj()).re;
    Ok(EnergyRecord {
        t: s.t,
        e: 0.5 * (zq_sq + mix * cross / (2.0 * params.beta)),
        zq_sq,
        non_coercive: params.beta <= 0.5,
    })
}

/// `∫₀ᵗ p(τ,k,η) dτ`.
fn integrated_symbol(t: f64, m: Mode) -> f64 {
    let k = m.kf();
    if m.k == 0 {
        return m.eta * m.eta * t;
    }
    let shifted = m.eta - k * t;
    k * k * t + (m.eta.powi(3) - shifted.powi(3)) / (3.0 * k)
}

/// Advances one mode from `t0` to `t1` at relative tolerance `tol`.
///
/// `k = 0` is solved exactly (pure heat decay). Otherwise the common factor
/// `exp(−min(ν,κ) ∫p)` is removed analytically and the remaining system is
/// integrated adaptively, implicitly when `|ν − κ| p` makes it stiff.
pub fn evolve_mode(
    s0: &ModeState,
    m: Mode,
    params: &PhysicalParams,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<ModeState> {
    if !(t0 >= 0.0 && t1 >= t0 && t1.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "evolve_mode requires 0 <= t0 <= t1, got t0 = {t0}, t1 = {t1}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be > 0".into()));
    }
    let dt = t1 - t0;
    if m.k == 0 {
        let e2 = m.eta * m.eta;
        return Ok(ModeState::new(
            s0.omega * (-params.nu * e2 * dt).exp(),
            s0.theta * (-params.kappa * e2 * dt).exp(),
            t1,
        ));
    }
    if s0.is_zero() || dt == 0.0 {
        return Ok(ModeState::new(s0.omega, s0.theta, t1));
    }
    let mu = params.nu.min(params.kappa);
    let dnu = params.nu - mu;
    let dkappa = params.kappa - mu;
    let k = m.kf();
    let beta_sq = params.beta * params.beta;
    let rhs = |t: f64| -> Mat2 {
        let p = symbol_p(t, m);
        [
            [
                Complex64::new(-dnu * p, 0.0),
                Complex64::new(0.0, -beta_sq * k),
            ],
            [
                Complex64::new(0.0, -k / p),
                Complex64::new(-dkappa * p, 0.0),
            ],
        ]
    };
    let p_max = symbol_p(t0, m).max(symbol_p(t1, m));
    let y0 = [s0.omega, s0.theta];
    let y = if (dnu + dkappa) * p_max * dt.min(1.0) > STIFFNESS_SWITCH {
        radau5(rhs, y0, t0, t1, tol)?
    } else {
        dopri45(rhs, y0, t0, t1, tol)?
    };
    let decay = if mu > 0.0 {
        (-mu * (integrated_symbol(t1, m) - integrated_symbol(t0, m))).exp()
    } else {
        1.0
    };
    Ok(ModeState::new(y[0] * decay, y[1] * decay, t1))
}

/// Samples the trajectory of `s0` (taken at `s0.t`) at each of `times`.
pub fn evolve_trajectory(
    s0: &ModeState,
    m: Mode,
    params: &PhysicalParams,
    times: &[f64],
    tol: f64,
) -> Result<Vec<ModeState>> {
    let mut out = Vec::with_capacity(times.len());
    let mut cur = *s0;
    for &t in times {
        cur = evolve_mode(&cur, m, params, cur.t, t, tol)?;
        out.push(cur);
    }
    Ok(out)
}

/// Outcome of a theorem-bound check on one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound: &'static str,
    pub pass: bool,
    /// Worst margin observed; see each check for its units.
    pub margin: f64,
    /// `(t, k, η)` at the worst sample.
    pub worst: Option<(f64, i64, f64)>,
}

/// Two-sided bound `C_β^{−2} I ≤ |Z|²+|Q|² ≤ C_β² I` (inviscid) or the
/// enhanced-dissipation envelope `C_β² e^{−λ_{ν,κ} k² t³/12} I` (viscous),
/// where `I` is the value at the first sample and `t` is measured from it.
///
/// The margin is logarithmic: the smallest `ln(bound / value)` over the
/// trajectory. The check passes when it is at least `−ln(1 + slack)`.
pub fn check_prop_ellisse(
    trajectory: &[SymmetricState],
    m: Mode,
    params: &PhysicalParams,
    slack: f64,
) -> Result<BoundReport> {
    let c_beta = params
        .c_beta()
        .ok_or_else(|| Error::InvalidInput("energy bounds require beta > 1/2".into()))?;
    let inviscid = params.is_inviscid();
    let lambda = if inviscid {
        0.0
    } else {
        params.lambda_nu_kappa().ok_or_else(|| {
            Error::InvalidInput(
                "viscous bound requires nu, kappa > 0 and max(nu,kappa)/min(nu,kappa) < 4 beta - 1"
                    .into(),
            )
        })?
    };
    let bound = if inviscid {
        "two-sided energy bound"
    } else {
        "enhanced dissipation envelope"
    };
    let Some(first) = trajectory.first() else {
        return Ok(BoundReport {
            bound,
            pass: true,
            margin: f64::INFINITY,
            worst: None,
        });
    };
    let ln_c2 = 2.0 * c_beta.ln();
    let ln_init = first.zq_sq().ln();
    let k2 = m.kf() * m.kf();
    let mut margin = f64::INFINITY;
    let mut worst = None;
    for s in trajectory {
        let ln_val = s.zq_sq().ln();
        let tau = s.t - first.t;
        let local = if ln_init == f64::NEG_INFINITY {
            if ln_val == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else if ln_val == f64::NEG_INFINITY {
            if inviscid {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            let upper = ln_c2 - lambda * k2 * tau.powi(3) / 12.0 + ln_init - ln_val;
            if inviscid {
                upper.min(ln_val - (ln_init - ln_c2))
            } else {
                upper
            }
        };
        if local < margin {
            margin = local;
            worst = Some((s.t, m.k, m.eta));
        }
    }
    Ok(BoundReport {
        bound,
        pass: margin >= -(slack.ln_1p()),
        margin,
        worst,
    })
}

/// `Σ = −β² i k Θ̂ − ν p Ω̂`, the bounded combination when `κ = 0`.
pub fn good_unknown(s: &ModeState, m: Mode, params: &PhysicalParams) -> GoodUnknown {
    let p = symbol_p(s.t, m);
    let ik = Complex64::new(0.0, m.kf());
    GoodUnknown {
        sigma: -ik * params.beta * params.beta * s.theta - s.omega * (params.nu * p),
    }
}

/// Measures `max_t p |Ω̂(t)| / (|Σ(0)| + |k Θ̂(0)|)` along a `κ = 0` trajectory;
/// passes when that ratio stays at most `c_margin`.
pub fn check_nondiffusive_decay(
    trajectory: &[ModeState],
    m: Mode,
    params: &PhysicalParams,
    c_margin: f64,
) -> Result<BoundReport> {
    if params.kappa != 0.0 || params.nu <= 0.0 {
        return Err(Error::InvalidInput(
            "non-diffusive check requires kappa = 0 and nu > 0".into(),
        ));
    }
    let bound = "non-diffusive algebraic decay";
    let Some(first) = trajectory.first() else {
        return Ok(BoundReport {
            bound,
            pass: true,
            margin: 0.0,
            worst: None,
        });
    };
    let reference = good_unknown(first, m, params).sigma.norm() + (first.theta * m.kf()).norm();
    let mut margin: f64 = 0.0;
    let mut worst = None;
    for s in trajectory {
        let weighted = symbol_p(s.t, m) * s.omega.norm();
        let ratio = if weighted == 0.0 {
            0.0
        } else if reference == 0.0 {
            f64::INFINITY
        } else {
            weighted / reference
        };
        if ratio > margin || worst.is_none() {
            margin = margin.max(ratio);
            worst = Some((s.t, m.k, m.eta));
        }
    }
    Ok(BoundReport {
        bound,
        pass: margin <= c_margin,
        margin,
        worst,
    })
}

/// Static-frame L² norms of one linear field at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldNorms {
    pub t: f64,
    pub theta: f64,
    pub ux: f64,
    pub uy: f64,
    pub omega: f64,
    pub grad_theta: f64,
}

impl FieldNorms {
    pub const LABELS: [&'static str; 5] =
        ["theta_neq", "ux_neq", "uy", "omega_neq", "grad_theta_neq"];

    pub fn values(&self) -> [f64; 5] {
        [self.theta, self.ux, self.uy, self.omega, self.grad_theta]
    }
}

/// Squared-norm contributions of one moving-frame mode; `(0, 0)` and `k = 0` excluded.
fn mode_contributions(s: &ModeState, m: Mode) -> [f64; 5] {
    if m.k == 0 {
        return [0.0; 5];
    }
    let p = symbol_p(s.t, m);
    let k = m.kf();
    let om2 = s.omega.norm_sqr();
    let th2 = s.theta.norm_sqr();
    let shifted = m.eta - k * s.t;
    [
        th2,
        shifted * shifted * om2 / (p * p),
        k * k * om2 / (p * p),
        om2,
        p * th2,
    ]
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first().is_some_and(|t| *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "times must be nonnegative and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn evolve_all_modes(
    f0: &SpectralField,
    params: &PhysicalParams,
    times: &[f64],
    tol: f64,
) -> Result<Vec<Vec<ModeState>>> {
    check_times(times)?;
    let lattice = *f0.lattice();
    let points: Vec<(i64, i64)> = lattice.points().collect();
    points
        .par_iter()
        .enumerate()
        .map(|(idx, &(k, j))| {
            let m = Mode::new(k, lattice.eta(j));
            let s0 = ModeState::new(f0.omega()[idx], f0.theta()[idx], 0.0);
            if s0.is_zero() {
                return Ok(times.iter().map(|&t| ModeState::zero(t)).collect());
            }
            evolve_trajectory(&s0, m, params, times, tol)
        })
        .collect()
}

fn assemble_norms(
    lattice: &Lattice,
    trajectories: &[Vec<ModeState>],
    times: &[f64],
) -> Vec<FieldNorms> {
    times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let mut sums = [0.0; 5];
            for ((k, j), traj) in lattice.points().zip(trajectories) {
                let c = mode_contributions(&traj[ti], Mode::new(k, lattice.eta(j)));
                for (acc, v) in sums.iter_mut().zip(c) {
                    *acc += v;
                }
            }
            let n = |v: f64| (v * lattice.eta_spacing).sqrt();
            FieldNorms {
                t,
                theta: n(sums[0]),
                ux: n(sums[1]),
                uy: n(sums[2]),
                omega: n(sums[3]),
                grad_theta: n(sums[4]),
            }
        })
        .collect()
}

/// Evolves every lattice mode of `f0` (given at `t = 0`) and returns the
/// moving-frame field with its static-frame norms at each requested time.
pub fn evolve_field_linear(
    f0: &SpectralField,
    params: &PhysicalParams,
    times: &[f64],
    tol: f64,
) -> Result<Vec<(SpectralField, FieldNorms)>> {
    let trajectories = evolve_all_modes(f0, params, times, tol)?;
    let lattice = *f0.lattice();
    let norms = assemble_norms(&lattice, &trajectories, times);
    norms
        .into_iter()
        .enumerate()
        .map(|(ti, n)| {
            let omega = trajectories.iter().map(|tr| tr[ti].omega).collect();
            let theta = trajectories.iter().map(|tr| tr[ti].theta).collect();
            Ok((SpectralField::from_parts(lattice, omega, theta)?, n))
        })
        .collect()
}

/// Same evolution as [`evolve_field_linear`], keeping only the norms.
pub fn evolve_field_norms(
    f0: &SpectralField,
    params: &PhysicalParams,
    times: &[f64],
    tol: f64,
) -> Result<Vec<FieldNorms>> {
    let trajectories = evolve_all_modes(f0, params, times, tol)?;
    Ok(assemble_norms(f0.lattice(), &trajectories, times))
}

/// One [`NormSeries`] per quantity in [`FieldNorms::LABELS`] order.
pub fn norm_series(records: &[FieldNorms]) -> Result<Vec<NormSeries>> {
    let mut out: Vec<NormSeries> = FieldNorms::LABELS
        .iter()
        .map(|l| NormSeries::new(*l))
        .collect();
    for r in records {
        for (s, v) in out.iter_mut().zip(r.values()) {
            s.push(r.t, v)?;
        }
    }
    Ok(out)
}

/// Zero vorticity perturbation and a centred Gaussian density blob
/// `θ = A exp(−(x² + y²)/(2w²))`, written as lattice Fourier coefficients.
pub fn gaussian_blob(lattice: Lattice, amplitude: f64, width: f64) -> SpectralField {
    let norm = amplitude * width * width / (2.0 * std::f64::consts::PI);
    SpectralField::from_fn(lattice, |k, eta| {
        let r2 = (k * k) as f64 + eta * eta;
        (
            Complex64::new(0.0, 0.0),
            Complex64::new(norm * (-0.5 * width * width * r2).exp(), 0.0),
        )
    })
}
