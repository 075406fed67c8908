//! Norm time series, log-log rate fits and envelope checks.

use crate::error::{Error, Result};
use crate::spectral::PhysicalParams;

/// Minimum number of samples a power-law fit accepts.
pub const MIN_FIT_SAMPLES: usize = 8;

/// A labelled `(t, value)` series with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    pub label: String,
    samples: Vec<(f64, f64)>,
}

impl NormSeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            samples: Vec::new(),
        }
    }

    pub fn from_samples(label: impl Into<String>, samples: Vec<(f64, f64)>) -> Result<Self> {
        let mut s = Self::new(label);
        for (t, v) in samples {
            s.push(t, v)?;
        }
        Ok(s)
    }

    /// Appends a sample; times must increase and values be finite.
    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if !t.is_finite() || !value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "series '{}': non-finite sample ({t}, {value})",
                self.label
            )));
        }
        if let Some(&(last, _)) = self.samples.last() {
            if t <= last {
                return Err(Error::InvalidInput(format!(
                    "series '{}': time {t} does not exceed {last}",
                    self.label
                )));
            }
        }
        self.samples.push((t, value));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }
}

/// Least-squares slope of `ln value` against `ln t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
}

/// Fits `value ≈ C t^a` on samples with `t_lo ≤ t ≤ t_hi`.
pub fn fit_power_law(s: &NormSeries, t_lo: f64, t_hi: f64) -> Result<RateFit> {
    if !(t_lo < t_hi) || t_lo <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "fit window must satisfy 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]"
        )));
    }
    let window: Vec<(f64, f64)> = s
        .samples()
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t_lo && *t <= t_hi)
        .collect();
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            found: window.len(),
        });
    }
    if let Some(&(t, value)) = window.iter().find(|(_, v)| *v <= 0.0) {
        return Err(Error::LogOfNonpositive { t, value });
    }
    let xs: Vec<f64> = window.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = window.iter().map(|(_, v)| v.ln()).collect();
    let (slope, stderr) = linear_regression(&xs, &ys);
    Ok(RateFit {
        exponent: slope,
        stderr,
        window: (t_lo, t_hi),
        n_samples: window.len(),
    })
}

/// Ordinary least squares `y = a + b x`; returns `(b, stderr(b))`.
pub(crate) fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, stderr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeMode {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// `value / envelope` at the least favourable sample (largest for upper, smallest for lower).
    pub worst_ratio: f64,
    pub worst_t: f64,
}

/// Compares every sample with `envelope(t)`, allowing relative `slack`.
pub fn check_envelope<F: Fn(f64) -> f64>(
    s: &NormSeries,
    envelope: F,
    mode: EnvelopeMode,
    slack: f64,
) -> EnvelopeReport {
    let mut worst_ratio = match mode {
        EnvelopeMode::Upper => 0.0,
        EnvelopeMode::Lower => f64::INFINITY,
    };
    let mut worst_t = f64::NAN;
    for &(t, v) in s.samples() {
        let env = envelope(t);
        let ratio = match mode {
            EnvelopeMode::Upper if v == 0.0 => 0.0,
            EnvelopeMode::Lower if env <= 0.0 => f64::INFINITY,
            _ => v / env,
        };
        let worse = match mode {
            EnvelopeMode::Upper => ratio > worst_ratio,
            EnvelopeMode::Lower => ratio < worst_ratio,
        };
        if worse || worst_t.is_nan() {
            worst_ratio = ratio;
            worst_t = t;
        }
    }
    let pass = match mode {
        EnvelopeMode::Upper => worst_ratio <= 1.0 + slack,
        EnvelopeMode::Lower => worst_ratio >= 1.0 / (1.0 + slack),
    };
    EnvelopeReport {
        pass,
        worst_ratio,
        worst_t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstabilityReport {
    pub pass: bool,
    /// Largest `c` with `‖ω‖ + ‖∇θ‖ ≥ c C_β^{-1} ⟨t⟩^{1/2} · initial` at every sample.
    pub c: f64,
    /// Power-law exponent of the normalized ratio over the second half of the samples.
    pub trend_exponent: Option<f64>,
}

/// Checks the `⟨t⟩^{1/2}` lower bound on `‖ω_{≠}‖ + ‖∇θ_{≠}‖`.
///
/// The constant is fitted, not prescribed: `c` is the worst normalized ratio,
/// and the verdict also requires the ratio not to decay (trend exponent `≥ −0.1`).
pub fn check_instability_lower_bound(
    omega: &NormSeries,
    grad_theta: &NormSeries,
    initial_lowfreq: f64,
    params: &PhysicalParams,
) -> Result<InstabilityReport> {
    let c_beta = params
        .c_beta()
        .ok_or_else(|| Error::InvalidInput("lower bound requires beta > 1/2".into()))?;
    if omega.len() != grad_theta.len() || omega.times().zip(grad_theta.times()).any(|(a, b)| a != b)
    {
        return Err(Error::InvalidInput(
            "omega and grad_theta series must share a time grid".into(),
        ));
    }
    let ratios: Vec<(f64, f64)> = omega
        .samples()
        .iter()
        .zip(grad_theta.samples())
        .map(|(&(t, w), &(_, g))| {
            let bracket = (1.0 + t * t).sqrt().sqrt();
            (t, (w + g) / (bracket * initial_lowfreq / c_beta))
        })
        .collect();
    let c = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let late: Vec<(f64, f64)> = ratios[ratios.len() / 2..]
        .iter()
        .copied()
        .filter(|(t, r)| *t > 0.0 && *r > 0.0)
        .collect();
    let trend_exponent = (late.len() >= MIN_FIT_SAMPLES).then(|| {
        let xs: Vec<f64> = late.iter().map(|r| r.0.ln()).collect();
        let ys: Vec<f64> = late.iter().map(|r| r.1.ln()).collect();
        linear_regression(&xs, &ys).0
    });
    let pass = c > 0.0 && c.is_finite() && trend_exponent.is_none_or(|e| e >= -0.1);
    Ok(InstabilityReport {
        pass,
        c,
        trend_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(label: &str, f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> NormSeries {
        let samples = (0..n)
            .map(|i| {
                let t = t0 * (t1 / t0).powf(i as f64 / (n - 1) as f64);
                (t, f(t))
            })
            .collect();
        NormSeries::from_samples(label, samples).unwrap()
    }

    #[test]
    fn exact_power_laws() {
        let s = series("uy", |t| t.powf(-1.5), 1.0, 100.0, 30);
        let fit = fit_power_law(&s, 10.0, 100.0).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-12);
        assert!(fit.stderr < 1e-10);

        let s = series("w", f64::sqrt, 1.0, 100.0, 30);
        assert!((fit_power_law(&s, 1.0, 100.0).unwrap().exponent - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let s = series("few", f64::sqrt, 1.0, 100.0, 5);
        assert_eq!(
            fit_power_law(&s, 1.0, 100.0).unwrap_err(),
            Error::InsufficientSamples {
                needed: 8,
                found: 5
            }
        );
        let s = series("z", |t| if t > 50.0 { 0.0 } else { t }, 1.0, 100.0, 20);
        assert!(matches!(
            fit_power_law(&s, 1.0, 100.0),
            Err(Error::LogOfNonpositive { .. })
        ));
        assert!(NormSeries::from_samples("bad", vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn envelope_examples() {
        let s = series("c", |_| 3.0, 1.0, 10.0, 10);
        let r = check_envelope(&s, |_| 3.0, EnvelopeMode::Upper, 0.0);
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 1.0);

        let s = series("d", |t| t.powf(-0.5), 1.0, 10.0, 10);
        assert!(check_envelope(&s, |t| 2.0 * t.powf(-0.5), EnvelopeMode::Upper, 0.0).pass);
        assert!(!check_envelope(&s, |t| 2.0 * t.powf(-0.5), EnvelopeMode::Lower, 0.0).pass);
        assert!(check_envelope(&s, |t| 0.5 * t.powf(-0.5), EnvelopeMode::Lower, 0.0).pass);
    }

    #[test]
    fn instability_examples() {
        let p = PhysicalParams::inviscid(1.0).unwrap();
        let cb = p.c_beta().unwrap();
        let bracket = |t: f64| (1.0 + t * t).powf(0.25);
        let w = series("w", bracket, 1.0, 100.0, 40);
        let zero = series("g", |_| 0.0, 1.0, 100.0, 40);
        let r = check_instability_lower_bound(&w, &zero, 1.0, &p).unwrap();
        assert!(r.pass);
        assert!((r.c - cb).abs() < 1e-12);

        let decay = series("w", |t| 1.0 / t, 1.0, 100.0, 40);
        let r = check_instability_lower_bound(&decay, &zero, 1.0, &p).unwrap();
        assert!(!r.pass);
    }

    proptest! {
        #[test]
        fn fit_is_scale_invariant(a in 0.01..100.0f64, e in -3.0..3.0f64) {
            let s1 = series("a", |t| t.powf(e), 1.0, 1000.0, 16);
            let s2 = series("b", |t| a * t.powf(e), 1.0, 1000.0, 16);
            let f1 = fit_power_law(&s1, 1.0, 1000.0).unwrap();
            let f2 = fit_power_law(&s2, 1.0, 1000.0).unwrap();
            prop_assert!((f1.exponent - e).abs() < 1e-10);
            prop_assert!((f1.exponent - f2.exponent).abs() < 1e-10);
        }

        #[test]
        fn envelope_verdict_is_scale_invariant(a in 0.01..100.0f64, amp in 0.1..3.0f64) {
            let s1 = series("a", |t| amp / t, 1.0, 10.0, 12);
            let s2 = series("b", |t| a * amp / t, 1.0, 10.0, 12);
            for mode in [EnvelopeMode::Upper, EnvelopeMode::Lower] {
                let r1 = check_envelope(&s1, |t| 1.0 / t, mode, 0.0);
                let r2 = check_envelope(&s2, |t| a / t, mode, 0.0);
                prop_assert_eq!(r1.pass, r2.pass);
            }
        }
    }
}
