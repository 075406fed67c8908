//! One runner per subcommand. Each writes its artifacts and returns a verdict.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratflow_core::diagnostics::{check_instability_lower_bound, fit_power_law, NormSeries};
use stratflow_core::eigen::{richardson_number, taylor_goldstein_spectrum, ShearProfile};
use stratflow_core::linear::{
    check_nondiffusive_decay, check_prop_ellisse, energy_e, evolve_field_norms, evolve_trajectory,
    gaussian_blob, norm_series, to_symmetric,
};
use stratflow_core::nonlinear::{self, Solver};
use stratflow_core::spectral::{sobolev_norm, split_zero_mode};
use stratflow_core::toy::{cascade_gain, fit_amplification_exponent, ToySweep};
use stratflow_core::{Component, Lattice, Mode, ModeState, PhysicalParams};

use crate::config::{
    EigenConfig, FitConfig, LinearFieldConfig, LinearModeConfig, NonlinearConfig, ProfileKind,
    ToyConfig,
};
use crate::output::{read_series, Check, OutputDir};
use crate::CliError;

/// Expected power-law exponents of the linear Gaussian-blob norms.
pub const BLOB_RATES: [(&str, f64); 5] = [
    ("theta_neq", -0.5),
    ("ux_neq", -0.5),
    ("uy", -1.5),
    ("omega_neq", 0.5),
    ("grad_theta_neq", 0.5),
];

fn linspace(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn series(label: String, samples: Vec<(f64, f64)>) -> Result<NormSeries, CliError> {
    Ok(NormSeries::from_samples(label, samples)?)
}

/// Checks one mode and appends its series. Labels get `suffix`.
fn linear_mode_one(
    m: Mode,
    s0: ModeState,
    params: &PhysicalParams,
    cfg: &LinearModeConfig,
    suffix: &str,
    out: &mut Vec<NormSeries>,
) -> Result<Option<Check>, CliError> {
    let times = linspace(cfg.t_end, cfg.samples);
    let traj = evolve_trajectory(&s0, m, params, &times, cfg.tol)?;
    let sym = traj
        .iter()
        .map(|s| to_symmetric(s, m, params))
        .collect::<stratflow_core::Result<Vec<_>>>()?;
    let energies = sym
        .iter()
        .map(|s| energy_e(s, m, params))
        .collect::<stratflow_core::Result<Vec<_>>>()?;
    let pick = |f: &dyn Fn(usize) -> f64| {
        times
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, f(i)))
            .collect::<Vec<_>>()
    };
    out.push(series(
        format!("omega_abs{suffix}"),
        pick(&|i| traj[i].omega.norm()),
    )?);
    out.push(series(
        format!("theta_abs{suffix}"),
        pick(&|i| traj[i].theta.norm()),
    )?);
    out.push(series(format!("zq_sq{suffix}"), pick(&|i| sym[i].zq_sq()))?);
    out.push(series(
        format!("energy_e{suffix}"),
        pick(&|i| energies[i].e),
    )?);

    let detail = format!("k = {}, eta = {}", m.k, m.eta);
    let check = if params.kappa == 0.0 && params.nu > 0.0 {
        let r = check_nondiffusive_decay(
            &traj,
            m,
            params,
            cfg.nondiffusive_bound.unwrap_or(f64::INFINITY),
        )?;
        let pass = r.pass && r.margin.is_finite();
        Some(Check::new(r.bound, r.margin, pass, detail))
    } else if params.is_inviscid() || params.enhanced_ok() {
        let r = check_prop_ellisse(&sym, m, params, cfg.slack)?;
        Some(Check::new(r.bound, r.margin, r.pass, detail))
    } else {
        None
    };
    Ok(check)
}

pub fn linear_mode(
    cfg: &LinearModeConfig,
    params: &PhysicalParams,
    seed: u64,
    dir: &mut OutputDir,
) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let mut checks = Vec::new();
    if cfg.random_modes == 0 {
        let s0 = ModeState::new(c(cfg.omega0), c(cfg.theta0), 0.0);
        checks.extend(linear_mode_one(
            Mode::new(cfg.k, cfg.eta),
            s0,
            params,
            cfg,
            "",
            &mut out,
        )?);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..cfg.random_modes {
            let k = rng.random_range(1..=8i64);
            let eta = rng.random_range(-50.0..=50.0);
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let norm = v
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let s0 = ModeState::new(
                Complex64::new(v[0], v[1]) / norm,
                Complex64::new(v[2], v[3]) / norm,
                0.0,
            );
            checks.extend(linear_mode_one(
                Mode::new(k, eta),
                s0,
                params,
                cfg,
                &format!("_{i}"),
                &mut out,
            )?);
        }
    }
    dir.csv("norms.csv", &out)?;
    Ok(checks)
}

pub fn linear_field(
    cfg: &LinearFieldConfig,
    params: &PhysicalParams,
    dir: &mut OutputDir,
) -> Result<Vec<Check>, CliError> {
    let lattice = Lattice::new(cfg.k_max, cfg.j_max, cfg.eta_spacing)?;
    let f0 = gaussian_blob(lattice, cfg.amplitude, cfg.width);
    let times = linspace(cfg.t_end, cfg.samples);
    let norms = evolve_field_norms(&f0, params, &times, cfg.tol)?;
    let all = norm_series(&norms)?;
    dir.csv("norms.csv", &all)?;

    let [lo, hi] = cfg.fit_window;
    let mut checks = Vec::new();
    for (label, expected) in BLOB_RATES {
        let s = all
            .iter()
            .find(|s| s.label == label)
            .expect("label present");
        let fit = fit_power_law(s, lo, hi)?;
        let gap = (fit.exponent - expected).abs();
        let pass = !params.is_inviscid() || gap <= cfg.rate_tolerance;
        checks.push(Check::new(
            format!("decay rate of {label}"),
            cfg.rate_tolerance - gap,
            pass,
            format!(
                "exponent {:.4} +- {:.1e} on [{lo}, {hi}], expected {expected} +- {}{}",
                fit.exponent,
                fit.stderr,
                cfg.rate_tolerance,
                if params.is_inviscid() {
                    ""
                } else {
                    " (informational: dissipative run)"
                }
            ),
        ));
    }
    if params.c_beta().is_some() {
        let (_, nonzero) = split_zero_mode(&f0);
        let lowfreq = sobolev_norm(&nonzero, Component::Omega, -1.0)
            + sobolev_norm(&nonzero, Component::Theta, 0.0);
        let om = all
            .iter()
            .find(|s| s.label == "omega_neq")
            .expect("label present");
        let gt = all
            .iter()
            .find(|s| s.label == "grad_theta_neq")
            .expect("label present");
        let r = check_instability_lower_bound(om, gt, lowfreq, params)?;
        let pass = r.pass || !params.is_inviscid();
        checks.push(Check::new(
            "shear-buoyancy growth lower bound",
            r.c,
            pass,
            format!("trend exponent {:?}", r.trend_exponent),
        ));
    }
    Ok(checks)
}

fn profile(cfg: &EigenConfig) -> ShearProfile {
    let range = |default: (f64, f64)| cfg.y_range.map(|[a, b]| (a, b)).unwrap_or(default);
    match cfg.profile {
        ProfileKind::Couette => match cfg.y_range {
            None => ShearProfile::couette(),
            Some([a, b]) => ShearProfile::linear(1.0, (a, b)),
        },
        ProfileKind::Rest => ShearProfile::rest(range((0.0, std::f64::consts::PI))),
        ProfileKind::Linear => ShearProfile::linear(cfg.slope, range((-1.0, 1.0))),
        ProfileKind::Tanh => ShearProfile::tanh(cfg.thickness, range((-2.5, 2.5))),
    }
}

pub fn eigen(cfg: &EigenConfig, dir: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let prof = profile(cfg);
    let res = taylor_goldstein_spectrum(&prof, cfg.beta_sq, cfg.k, cfg.n_grid)?;
    let idx = |f: &dyn Fn(usize) -> f64| {
        (0..res.eigenvalues.len())
            .map(|i| (i as f64, f(i)))
            .collect::<Vec<_>>()
    };
    let out = vec![
        series("re".into(), idx(&|i| res.eigenvalues[i].re))?,
        series("im".into(), idx(&|i| res.eigenvalues[i].im))?,
        series("residual".into(), idx(&|i| res.residuals[i]))?,
        series(
            "classified".into(),
            idx(&|i| if res.classified[i] { 1.0 } else { 0.0 }),
        )?,
    ];
    dir.csv("spectrum.csv", &out)?;

    let (ri, miles_howard) = richardson_number(&prof, cfg.beta_sq, 2001);
    let stable = res.classification == stratflow_core::eigen::Classification::SpectrallyStable;
    let growth = if res.max_growth.is_finite() {
        res.max_growth
    } else {
        0.0
    };
    let mut checks = vec![Check::new(
        res.classification.as_str(),
        growth,
        true,
        format!(
            "max Re s = {:e} over {} classified of {} eigenvalues (tolerance {:e}); max Re s over all = {:e}",
            growth,
            res.classified.iter().filter(|c| **c).count(),
            res.eigenvalues.len(),
            res.stability_tol,
            res.max_growth_all
        ),
    )];
    if miles_howard {
        checks.push(Check::new(
            "Miles-Howard criterion Ri > 1/4",
            ri - 0.25,
            stable,
            format!("min Ri = {ri}; spectral stability expected"),
        ));
    }
    Ok(checks)
}

pub fn toy(cfg: &ToyConfig, dir: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let sweep = ToySweep {
        eps: cfg.eps,
        ratios: cfg.ratios.clone(),
        time_scale: cfg.time_scale,
        delta: cfg.delta,
        tol: cfg.tol,
    };
    let fit = fit_amplification_exponent(&sweep)?;
    let mut out = vec![series(
        "gain".into(),
        fit.ratios
            .iter()
            .copied()
            .zip(fit.gains.iter().copied())
            .collect(),
    )?];
    let mut checks = vec![Check::new(
        "amplification exponent 1 < c < 4",
        (fit.c - 1.0).min(4.0 - fit.c),
        fit.in_range,
        format!("c = {:.4} +- {:.2e}", fit.c, fit.stderr),
    )];
    let mut logs = Vec::new();
    let mut stirling = Vec::new();
    let mut etas = cfg.cascade_eta.clone();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    for eta in etas {
        let r = cascade_gain(eta, fit.c)?;
        logs.push((eta, r.log_total));
        stirling.push((eta, r.stirling_log));
        let gap = r.stirling_relative_gap();
        checks.push(Check::new(
            format!("cascade log-gain vs Stirling envelope, eta = {eta}"),
            cfg.cascade_tolerance - gap,
            gap <= cfg.cascade_tolerance,
            format!(
                "log total {:.6}, envelope {:.6}, relative gap {gap:.4}",
                r.log_total, r.stirling_log
            ),
        ));
    }
    if !logs.is_empty() {
        out.push(series("cascade_log_total".into(), logs)?);
        out.push(series("stirling_log".into(), stirling)?);
    }
    dir.csv("toy.csv", &out)?;
    Ok(checks)
}

pub fn run_nonlinear(
    cfg: &NonlinearConfig,
    quiet: bool,
    dir: &mut OutputDir,
) -> Result<Vec<Check>, CliError> {
    let sim = cfg.sim_config();
    let solver = Solver::new(&sim)?;
    let mut frames = Vec::new();
    let state = solver.initial_state();
    let result = nonlinear::run_from(
        &solver,
        state,
        &mut |snap: &nonlinear::snapshot::Snapshot| {
            frames.push(snap.clone());
            Ok(())
        },
    )?;
    for (n, snap) in frames.iter().enumerate() {
        if !quiet {
            eprintln!("snapshot {n} at t = {}", snap.t);
        }
        dir.raw(&format!("snapshot_{n:04}.bin"), &snap.to_bytes())?;
        if cfg.images {
            dir.pgm(&format!("omega_{n:04}.pgm"), snap.nx, snap.ny, &snap.omega)?;
            dir.pgm(&format!("theta_{n:04}.pgm"), snap.nx, snap.ny, &snap.theta)?;
        }
    }
    dir.csv("norms.csv", &result.series)?;

    let get = |l: &str| result.series(l).expect("label present");
    let mut checks = Vec::new();
    let theta = get("mean_theta");
    let omega = get("mean_omega");
    let first_theta = theta.samples()[0].1;
    let drift_theta = theta
        .values()
        .map(|v| (v - first_theta).abs())
        .fold(0.0, f64::max);
    let scale = first_theta.abs().max(f64::MIN_POSITIVE);
    checks.push(Check::new(
        "conservation of mean density",
        drift_theta / scale,
        drift_theta <= cfg.means_tolerance * scale,
        "max |int theta(t) - int theta(0)| / |int theta(0)|",
    ));
    let omega_scale = get("omega_neq").values().fold(0.0, f64::max)
        * (2.0 * std::f64::consts::PI * cfg.ly).sqrt();
    let drift_omega = omega.values().map(f64::abs).fold(0.0, f64::max);
    checks.push(Check::new(
        "conservation of mean vorticity",
        drift_omega / omega_scale.max(f64::MIN_POSITIVE),
        drift_omega <= cfg.means_tolerance * omega_scale.max(f64::MIN_POSITIVE),
        "max |int omega| relative to sqrt(area) max ||omega||",
    ));
    if sim.params.is_inviscid() {
        let h = get("energy");
        let worst = get("dH_dt")
            .samples()
            .iter()
            .zip(get("reynolds_stress").samples())
            .zip(h.samples())
            .map(|((a, b), e)| (a.1 - b.1).abs() / e.1.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        checks.push(Check::new(
            "energy balance dH/dt = -int u^x u^y",
            worst,
            worst <= cfg.energy_tolerance,
            "max |dH/dt + int u^x u^y| / H over output times",
        ));
    }
    for w in &result.warnings {
        if !quiet {
            eprintln!("warning: {w}");
        }
    }
    Ok(checks)
}

pub fn fit(cfg: &FitConfig, dir: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let s = read_series(&cfg.input, &cfg.label)?;
    let r = fit_power_law(&s, cfg.t_lo, cfg.t_hi)?;
    dir.json(
        "fit.json",
        &serde_json::json!({
            "label": cfg.label,
            "exponent": r.exponent,
            "stderr": r.stderr,
            "window": [r.window.0, r.window.1],
            "n_samples": r.n_samples,
        }),
    )?;
    let checks = match cfg.expected {
        None => Vec::new(),
        Some(e) => {
            let gap = (r.exponent - e).abs();
            vec![Check::new(
                format!("power-law exponent of {}", cfg.label),
                cfg.tolerance - gap,
                gap <= cfg.tolerance,
                format!(
                    "fitted {:.6}, expected {e} +- {}",
                    r.exponent, cfg.tolerance
                ),
            )]
        }
    };
    Ok(checks)
}
