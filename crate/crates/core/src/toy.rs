//! Two-mode echo model near the critical time `η/k`, and the arithmetic of a
//! cascade `k → k−1 → … → 1` of such resonances.
//!
//! On `|t − η/k| ≤ η/k²` the pair `(Z_k, Z_{k−1})` obeys
//!
//! ```text
//! Z_k'     = (k²/η)^{1/2} ε √(1+t) (1 + (t − η/k)²)^{−1/4} Z_{k−1}
//! Z_{k−1}' = (η/k²)^{1/2} ε √(1+t) (1 + (t − η/k)²)^{−3/4} Z_k
//! ```

use num_complex::Complex64;

use crate::diagnostics::linear_regression;
use crate::error::{Error, Result};
use crate::ode::{dopri45, Mat2};

/// Number of uniform output intervals across the resonant window.
const TOY_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyParams {
    pub eps: f64,
    pub eta: f64,
    pub k: i64,
    pub z_k0: Complex64,
    pub z_km10: Complex64,
}

impl ToyParams {
    /// Unit initial data `(Z_k, Z_{k−1}) = (1, 1)`.
    pub fn unit(eps: f64, eta: f64, k: i64) -> Self {
        Self {
            eps,
            eta,
            k,
            z_k0: Complex64::new(1.0, 0.0),
            z_km10: Complex64::new(1.0, 0.0),
        }
    }

    pub fn critical_time(&self) -> f64 {
        self.eta / self.k as f64
    }

    /// `η/k²`, the half-width of the resonant window.
    pub fn ratio(&self) -> f64 {
        self.eta / (self.k as f64 * self.k as f64)
    }

    /// `ε² η / k`, the window centre measured on the `ε^{−2}` scale.
    pub fn time_scale(&self) -> f64 {
        self.eps * self.eps * self.critical_time()
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidInput("eps must be finite and >= 0".into()));
        }
        if self.k < 1 || !(self.eta > 0.0) {
            return Err(Error::InvalidInput(
                "toy model needs k >= 1 and eta > 0".into(),
            ));
        }
        if self.ratio() < 4.0 {
            return Err(Error::InvalidInput(format!(
                "eta/k^2 = {} must be >= 4 for a nontrivial resonant window",
                self.ratio()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyTrajectory {
    pub times: Vec<f64>,
    pub z_k: Vec<Complex64>,
    pub z_km1: Vec<Complex64>,
}

impl ToyTrajectory {
    /// `sup_t max(|Z_k|, |Z_{k−1}|) / max(|Z_k(0)|, |Z_{k−1}(0)|)`; 1 for zero data.
    pub fn gain(&self) -> f64 {
        let amp = |i: usize| self.z_k[i].norm().max(self.z_km1[i].norm());
        let init = amp(0);
        if init == 0.0 {
            return 1.0;
        }
        (0..self.times.len()).map(amp).fold(0.0, f64::max) / init
    }
}

/// Integrates the pair across `[η/k − η/k², η/k + η/k²]`.
pub fn evolve_toy(p: &ToyParams, tol: f64) -> Result<ToyTrajectory> {
    p.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be > 0".into()));
    }
    let k = p.k as f64;
    let tc = p.critical_time();
    let half = p.ratio();
    let (t0, t1) = (tc - half, tc + half);
    let up = (k * k / p.eta).sqrt() * p.eps;
    let down = (p.eta / (k * k)).sqrt() * p.eps;
    let rhs = |t: f64| -> Mat2 {
        let s = 1.0 + (t - tc) * (t - tc);
        let g = (1.0 + t).sqrt();
        let z = Complex64::new(0.0, 0.0);
        [
            [z, Complex64::new(up * g / s.powf(0.25), 0.0)],
            [Complex64::new(down * g / s.powf(0.75), 0.0), z],
        ]
    };
    let mut times = Vec::with_capacity(TOY_SAMPLES + 1);
    let mut z_k = Vec::with_capacity(TOY_SAMPLES + 1);
    let mut z_km1 = Vec::with_capacity(TOY_SAMPLES + 1);
    let mut y = [p.z_k0, p.z_km10];
    let mut t = t0;
    times.push(t);
    z_k.push(y[0]);
    z_km1.push(y[1]);
    for i in 1..=TOY_SAMPLES {
        let next = if i == TOY_SAMPLES {
            t1
        } else {
            t0 + (t1 - t0) * i as f64 / TOY_SAMPLES as f64
        };
        y = dopri45(rhs, y, t, next, tol)?;
        t = next;
        times.push(t);
        z_k.push(y[0]);
        z_km1.push(y[1]);
    }
    Ok(ToyTrajectory { times, z_k, z_km1 })
}

/// Sweep over window ratios `η/k²` at a fixed time scale `ρ = ε² η / k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySweep {
    pub eps: f64,
    pub ratios: Vec<f64>,
    pub time_scale: f64,
    /// Largest admissible `ε² η / k`.
    pub delta: f64,
    pub tol: f64,
}

impl ToySweep {
    /// `ε = 10⁻³`, `η/k² ∈ {16, 32, 64, 128}`, `ρ = 1/2`, `δ = 1`.
    pub fn standard() -> Self {
        Self {
            eps: 1e-3,
            ratios: vec![16.0, 32.0, 64.0, 128.0],
            time_scale: 0.5,
            delta: 1.0,
            tol: 1e-10,
        }
    }

    /// The `(η, k)` pair realizing each ratio: `k ≈ ρ/(ε² r)` rounded, `η = r k²`.
    pub fn modes(&self) -> Vec<(f64, i64)> {
        let tc = self.time_scale / (self.eps * self.eps);
        self.ratios
            .iter()
            .map(|&r| {
                let k = (tc / r).round().max(1.0) as i64;
                (r * (k * k) as f64, k)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationFit {
    pub c: f64,
    pub stderr: f64,
    pub ratios: Vec<f64>,
    pub gains: Vec<f64>,
    /// `1 < c < 4`.
    pub in_range: bool,
}

/// Least-squares slope of `ln gain` against `ln(η/k²)`.
pub fn fit_exponent_from_gains(ratios: &[f64], gains: &[f64]) -> Result<AmplificationFit> {
    if ratios.len() != gains.len() || ratios.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two (ratio, gain) pairs".into(),
        ));
    }
    if let Some((i, &g)) = gains.iter().enumerate().find(|(_, g)| **g <= 0.0) {
        return Err(Error::LogOfNonpositive {
            t: ratios[i],
            value: g,
        });
    }
    let xs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = gains.iter().map(|g| g.ln()).collect();
    let (c, stderr) = linear_regression(&xs, &ys);
    Ok(AmplificationFit {
        c,
        stderr,
        ratios: ratios.to_vec(),
        gains: gains.to_vec(),
        in_range: c > 1.0 && c < 4.0,
    })
}

/// Runs the sweep and fits the amplification exponent `c` in `gain ≈ (η/k²)^c`.
pub fn fit_amplification_exponent(sweep: &ToySweep) -> Result<AmplificationFit> {
    let modes = sweep.modes();
    for &(eta, k) in &modes {
        let value = sweep.eps * sweep.eps * eta / k as f64;
        if value > sweep.delta {
            return Err(Error::OutsidePerturbativeTimeScale {
                value,
                delta: sweep.delta,
            });
        }
    }
    let gains = modes
        .iter()
        .map(|&(eta, k)| {
            evolve_toy(&ToyParams::unit(sweep.eps, eta, k), sweep.tol).map(|tr| tr.gain())
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = modes.iter().map(|&(eta, k)| eta / (k * k) as f64).collect();
    fit_exponent_from_gains(&ratios, &gains)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeReport {
    /// `(η/k²)^c` for `k = K, K−1, …, 1`.
    pub per_step_gains: Vec<f64>,
    pub log_per_step: Vec<f64>,
    /// Product of the per-step gains; may be `+∞` when it exceeds `f64`.
    pub total_gain: f64,
    pub log_total: f64,
    /// `2c√η − (c/2) ln η`.
    pub stirling_log: f64,
    /// The exponent the cascade was evaluated with.
    pub fitted_c: f64,
}

impl CascadeReport {
    /// `|log_total − stirling_log| / |stirling_log|`.
    pub fn stirling_relative_gap(&self) -> f64 {
        (self.log_total - self.stirling_log).abs() / self.stirling_log.abs()
    }
}

/// Cascade product `Π_{k=1}^{K} (η/k²)^c = (η^K / (K!)²)^c`, `K = ⌊√η⌋`, in log space.
pub fn cascade_gain(eta: f64, c: f64) -> Result<CascadeReport> {
    if !(eta >= 1.0 && eta.is_finite()) {
        return Err(Error::InvalidInput("cascade needs eta >= 1".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput("cascade exponent must be > 0".into()));
    }
    let big_k = eta.sqrt().floor() as i64;
    let log_per_step: Vec<f64> = (1..=big_k)
        .rev()
        .map(|k| c * (eta.ln() - 2.0 * (k as f64).ln()))
        .collect();
    let log_total: f64 = log_per_step.iter().sum();
    Ok(CascadeReport {
        per_step_gains: log_per_step.iter().map(|l| l.exp()).collect(),
        total_gain: log_total.exp(),
        log_total,
        stirling_log: 2.0 * c * eta.sqrt() - 0.5 * c * eta.ln(),
        fitted_c: c,
        log_per_step,
    })
}

/// Time interval `[η/(k+1), η/k]` ending at the critical time of `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalInterval {
    pub k: i64,
    pub start: f64,
    pub end: f64,
    pub critical_time: f64,
    /// `[η/k − η/k², η/k + η/k²]`.
    pub resonant: (f64, f64),
}

/// Intervals for `k = k_max, …, 1`; together they tile `[η/(k_max+1), η]`.
pub fn critical_time_partition(eta: f64, k_max: i64) -> Result<Vec<CriticalInterval>> {
    if !(eta > 0.0) || k_max < 1 {
        return Err(Error::InvalidInput(
            "partition needs eta > 0 and k_max >= 1".into(),
        ));
    }
    Ok((1..=k_max)
        .rev()
        .map(|k| {
            let kf = k as f64;
            let tc = eta / kf;
            CriticalInterval {
                k,
                start: eta / (kf + 1.0),
                end: tc,
                critical_time: tc,
                resonant: (tc - eta / (kf * kf), tc + eta / (kf * kf)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn decoupled_and_zero() {
        let tr = evolve_toy(&ToyParams::unit(0.0, 400.0, 5), 1e-10).unwrap();
        assert!(tr
            .z_k
            .iter()
            .chain(&tr.z_km1)
            .all(|z| *z == Complex64::new(1.0, 0.0)));
        let mut p = ToyParams::unit(0.01, 400.0, 5);
        p.z_k0 = Complex64::new(0.0, 0.0);
        p.z_km10 = Complex64::new(0.0, 0.0);
        let tr = evolve_toy(&p, 1e-10).unwrap();
        assert!(tr.z_k.iter().chain(&tr.z_km1).all(|z| z.norm() == 0.0));
        assert!(evolve_toy(&ToyParams::unit(0.01, 30.0, 3), 1e-10).is_err());
    }

    #[test]
    fn reference_gain_eps_1e2() {
        // frozen from an independent scipy solve_ivp run (rtol 1e-10)
        let g = evolve_toy(&ToyParams::unit(0.01, 1e4, 10), 1e-10)
            .unwrap()
            .gain();
        assert_relative_eq!(g, 63.0397, max_relative = 1e-5);
    }

    #[test]
    fn synthetic_fit() {
        let r = [16.0, 32.0, 64.0, 128.0];
        let g: Vec<f64> = r.iter().map(|x: &f64| x * x).collect();
        let fit = fit_exponent_from_gains(&r, &g).unwrap();
        assert_relative_eq!(fit.c, 2.0, epsilon = 1e-12);
        assert!(fit.in_range);
    }

    #[test]
    fn regime_guard() {
        let mut s = ToySweep::standard();
        s.eps = 0.1;
        s.time_scale = 5.0;
        assert!(matches!(
            fit_amplification_exponent(&s),
            Err(Error::OutsidePerturbativeTimeScale { .. })
        ));
    }

    #[test]
    fn cascade_examples() {
        let r = cascade_gain(4.0, 1.7).unwrap();
        assert_relative_eq!(r.total_gain, 4f64.powf(1.7), max_relative = 1e-14);
        assert_eq!(r.per_step_gains.len(), 2);
        let r = cascade_gain(1.0, 2.0).unwrap();
        assert_eq!(r.total_gain, 1.0);
        // η = 100, c = 1: ln(100^10 / (10!)²), from math.lgamma
        let r = cascade_gain(100.0, 1.0).unwrap();
        assert_relative_eq!(r.log_total, 15.842_876_713_73, max_relative = 1e-12);
        assert!(r.stirling_relative_gap() < 0.2);
    }

    #[test]
    fn partition_examples() {
        let p = critical_time_partition(10.0, 3).unwrap();
        let bps: Vec<f64> = std::iter::once(p[0].start)
            .chain(p.iter().map(|i| i.end))
            .collect();
        assert_eq!(bps, vec![2.5, 10.0 / 3.0, 5.0, 10.0]);
        let p = critical_time_partition(1.0, 1).unwrap();
        assert_eq!((p[0].start, p[0].end), (0.5, 1.0));

        let p = critical_time_partition(1e3, 31).unwrap();
        assert_eq!(p.len(), 31);
        assert_relative_eq!(p[0].start, 1e3 / 32.0);
        assert_eq!(p.last().unwrap().end, 1e3);
        for w in p.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert!(w[0].start < w[0].end);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gain_monotone_in_eps(eps in 0.0..0.02f64, deps in 0.0..0.01f64, k in 2i64..8, r in 4.0..40.0f64) {
            let eta = r * (k * k) as f64;
            let g1 = evolve_toy(&ToyParams::unit(eps, eta, k), 1e-10).unwrap().gain();
            let g2 = evolve_toy(&ToyParams::unit(eps + deps, eta, k), 1e-10).unwrap().gain();
            prop_assert!(g2 >= g1 * (1.0 - 1e-9));
        }

        #[test]
        fn cascade_total_is_product(eta in 1.0..5000.0f64, c in 1.0..4.0f64) {
            let r = cascade_gain(eta, c).unwrap();
            let big_k = eta.sqrt().floor();
            let lgamma: f64 = (1..=big_k as i64).map(|k| (k as f64).ln()).sum();
            let closed = c * (big_k * eta.ln() - 2.0 * lgamma);
            prop_assert!((r.log_total - closed).abs() <= 1e-9 * (1.0 + closed.abs()));
            prop_assert!((r.log_total - r.log_per_step.iter().sum::<f64>()).abs() == 0.0);
        }
    }
}
