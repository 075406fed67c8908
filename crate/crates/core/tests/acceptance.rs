//! Acceptance suite. Each criterion prints one `ACCEPTANCE` line with its
//! measured quantities and the pinned tolerances below, then asserts.
//!
//! Criteria share a lock so their wall-clock budgets are measured one at a time.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratflow_core::diagnostics::fit_power_law;
use stratflow_core::eigen::{
    rayleigh_taylor_spectrum, taylor_goldstein_spectrum, Classification, ShearProfile,
};
use stratflow_core::linear::{
    check_nondiffusive_decay, check_prop_ellisse, evolve_field_norms, evolve_mode,
    evolve_trajectory, gaussian_blob, norm_series, to_symmetric,
};
use stratflow_core::nonlinear::{self, SimConfig, SimState, Solver};
use stratflow_core::toy::{cascade_gain, fit_amplification_exponent, ToySweep};
use stratflow_core::{Lattice, Mode, ModeState, PhysicalParams};

static SERIAL: Mutex<()> = Mutex::new(());

// criterion 1
const INVISCID_SAMPLES: usize = 1000;
const INVISCID_T_END: f64 = 200.0;
const BOUND_SLACK: f64 = 1e-6;
const TRAJECTORY_POINTS: usize = 801;
const LINEAR_TOL: f64 = 1e-10;
// criterion 2
const VISCOUS_SAMPLES: usize = 200;
const UNEQUAL_SAMPLES: usize = 100;
/// Sample window stops once `λ k² t³ / 12` reaches this (the envelope is then below e^{-600}).
const ENVELOPE_LOG_CAP: f64 = 600.0;
// criterion 3
const RATE_TOL: f64 = 0.1;
const FIT_WINDOW: (f64, f64) = (10.0, 100.0);
// criterion 4
const NONDIFFUSIVE_MODES: usize = 100;
// criterion 5
const RT_REL_TOL: f64 = 1e-8;
const TG_RT_REL_TOL: f64 = 0.01;
const TG_GRID: usize = 512;
// criterion 6
const CASCADE_REL_TOL: f64 = 0.2;
// criterion 7
const MEANS_REL_TOL: f64 = 1e-9;
const ENERGY_REL_TOL: f64 = 1e-6;
const LINEARIZED_REL_TOL: f64 = 0.1;
/// "10× integrator tolerance" for the fixed-step scheme, relative to the largest coefficient.
const LINEAR_MATCH_TOL: f64 = 10.0 * LINEAR_TOL;
// criterion 8
const ORDER_RANGE: (f64, f64) = (3.5, 4.5);

fn report(n: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let within = elapsed <= budget;
    println!(
        "ACCEPTANCE {n} {}: {name}; {detail}; runtime {:.1}s (budget {}s{})",
        if pass && within { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if within { "" } else { ", exceeded" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
    assert!(within, "criterion {n} exceeded its runtime budget");
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn unit_state(rng: &mut ChaCha8Rng) -> ModeState {
    let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    ModeState::new(
        Complex64::new(v[0], v[1]) / n,
        Complex64::new(v[2], v[3]) / n,
        0.0,
    )
}

fn random_mode(rng: &mut ChaCha8Rng) -> Mode {
    Mode::new(rng.random_range(1..=8), rng.random_range(-50.0..=50.0))
}

fn grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}

/// Smallest log margin of the energy bound along one trajectory.
fn bound_margin(m: Mode, params: &PhysicalParams, s0: ModeState, t_end: f64) -> f64 {
    let traj =
        evolve_trajectory(&s0, m, params, &grid(t_end, TRAJECTORY_POINTS), LINEAR_TOL).unwrap();
    let sym: Vec<_> = traj
        .iter()
        .map(|s| to_symmetric(s, m, params).unwrap())
        .collect();
    check_prop_ellisse(&sym, m, params, BOUND_SLACK)
        .unwrap()
        .margin
}

#[test]
fn criterion_1_inviscid_energy_bounds() {
    let _g = lock();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::INFINITY;
    for _ in 0..INVISCID_SAMPLES {
        let params = PhysicalParams::inviscid(rng.random_range(0.51..10.0)).unwrap();
        let m = random_mode(&mut rng);
        let s0 = unit_state(&mut rng);
        worst = worst.min(bound_margin(m, &params, s0, INVISCID_T_END));
    }
    let pass = worst >= -BOUND_SLACK.ln_1p();
    report(
        1,
        "inviscid two-sided bound C_b^-2 <= (|Z|^2+|Q|^2)/initial <= C_b^2",
        pass,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{INVISCID_SAMPLES} trajectories on [0, {INVISCID_T_END}], worst log margin {worst:.3e}, slack {BOUND_SLACK:e}"),
    );
}

#[test]
fn criterion_2_enhanced_dissipation_envelope() {
    let _g = lock();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    let run = |params: PhysicalParams, rng: &mut ChaCha8Rng| {
        let m = random_mode(rng);
        let lambda = params.lambda_nu_kappa().expect("ratio condition");
        let t_cap = (12.0 * ENVELOPE_LOG_CAP / (lambda * m.kf() * m.kf())).cbrt();
        let s0 = unit_state(rng);
        bound_margin(m, &params, s0, t_cap.min(INVISCID_T_END))
    };
    let levels = [1e-1, 1e-2, 1e-3, 1e-4];
    for i in 0..VISCOUS_SAMPLES {
        let nu = levels[i % levels.len()];
        let params = PhysicalParams::new(rng.random_range(0.51..10.0), nu, nu).unwrap();
        worst = worst.min(run(params, &mut rng));
    }
    let mut worst_unequal = f64::INFINITY;
    for i in 0..UNEQUAL_SAMPLES {
        let beta = rng.random_range(0.6..10.0);
        let ratio = 1.0 + rng.random_range(0.0..0.95) * (4.0 * beta - 2.0);
        let nu = levels[i % levels.len()];
        let (a, b) = if i % 2 == 0 {
            (nu, nu * ratio)
        } else {
            (nu * ratio, nu)
        };
        let params = PhysicalParams::new(beta, a, b).unwrap();
        assert!(params.enhanced_ok());
        worst_unequal = worst_unequal.min(run(params, &mut rng));
    }
    let tol = -BOUND_SLACK.ln_1p();
    report(
        2,
        "enhanced dissipation envelope C_b^2 exp(-lambda k^2 t^3/12)",
        worst >= tol && worst_unequal >= tol,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "{VISCOUS_SAMPLES} nu=kappa trajectories worst log margin {worst:.3e}; {UNEQUAL_SAMPLES} nu!=kappa worst {worst_unequal:.3e}"
        ),
    );
}

#[test]
fn criterion_3_blob_decay_rates() {
    let _g = lock();
    let start = Instant::now();
    let params = PhysicalParams::inviscid(2.0).unwrap();
    let lattice = Lattice::new(128, 256, 0.1).unwrap();
    let f0 = gaussian_blob(lattice, 1.0, 1.0);
    let norms = evolve_field_norms(&f0, &params, &grid(100.0, 201), LINEAR_TOL).unwrap();
    let series = norm_series(&norms).unwrap();
    let expected = [
        ("theta_neq", -0.5),
        ("ux_neq", -0.5),
        ("uy", -1.5),
        ("omega_neq", 0.5),
        ("grad_theta_neq", 0.5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, e) in expected {
        let s = series.iter().find(|s| s.label == label).unwrap();
        let fit = fit_power_law(s, FIT_WINDOW.0, FIT_WINDOW.1).unwrap();
        pass &= (fit.exponent - e).abs() <= RATE_TOL;
        parts.push(format!("{label} {:+.3} (want {e:+})", fit.exponent));
    }
    report(
        3,
        "Gaussian-blob linear rates on [10, 100], 257x513 lattice",
        pass,
        start.elapsed(),
        Duration::from_secs(120),
        &format!("{}; tolerance {RATE_TOL}", parts.join(", ")),
    );
}

#[test]
fn criterion_4_zero_diffusivity() {
    let _g = lock();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for nu in [1.0, 0.1] {
        let params = PhysicalParams::new(rng.random_range(0.51..10.0), nu, 0.0).unwrap();
        for _ in 0..NONDIFFUSIVE_MODES {
            let m = random_mode(&mut rng);
            let s0 = unit_state(&mut rng);
            let traj = evolve_trajectory(&s0, m, &params, &grid(100.0, 1001), LINEAR_TOL).unwrap();
            let r = check_nondiffusive_decay(&traj, m, &params, f64::INFINITY).unwrap();
            worst = worst.max(r.margin);
        }
    }
    report(
        4,
        "p|Omega(t)| <= C (|Sigma(0)| + |k Theta(0)|) with kappa = 0",
        worst.is_finite(),
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "{} modes over nu in {{1, 0.1}}, t in [0, 100]; largest bound ratio C = {worst:.4}",
            2 * NONDIFFUSIVE_MODES
        ),
    );
}

#[test]
fn criterion_5_eigen_suite() {
    let _g = lock();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_rt: f64 = 0.0;
    for _ in 0..20 {
        let beta_sq = rng.random_range(-4.0..4.0);
        let k = rng.random_range(1..=6);
        let n = rng.random_range(1..=5usize);
        let height = rng.random_range(0.5..4.0);
        let res = rayleigh_taylor_spectrum(beta_sq, k, height, n).unwrap();
        let kf = k as f64;
        let q = n as f64 * PI / height;
        let s_sq = -beta_sq * kf * kf / (kf * kf + q * q);
        let got = res.eigenvalues[2 * (n - 1)];
        worst_rt = worst_rt.max((got * got - s_sq).norm() / s_sq.abs());
    }
    let mut couette = Vec::new();
    let mut stable = true;
    for beta_sq in [0.26, 0.5, 1.0, 4.0] {
        let res = taylor_goldstein_spectrum(&ShearProfile::couette(), beta_sq, 1, TG_GRID).unwrap();
        stable &= res.classification == Classification::SpectrallyStable;
        couette.push(format!("{beta_sq}: {}", res.classification.as_str()));
    }
    let rest = taylor_goldstein_spectrum(&ShearProfile::rest((0.0, PI)), -1.0, 1, TG_GRID).unwrap();
    let growth = rest.most_unstable().map_or(f64::NAN, |s| s.re);
    let analytic = (0.5f64).sqrt();
    let rt_gap = (growth - analytic).abs() / analytic;
    let unstable = rest.classification == Classification::SpectrallyUnstable;
    report(
        5,
        "Rayleigh-Taylor dispersion and Taylor-Goldstein classification",
        worst_rt <= RT_REL_TOL && stable && unstable && rt_gap <= TG_RT_REL_TOL,
        start.elapsed(),
        Duration::from_secs(120),
        &format!(
            "RT worst rel err {worst_rt:.2e} (tol {RT_REL_TOL:e}); Couette {}; rest beta^2=-1 growth {growth:.6} vs {analytic:.6} rel {rt_gap:.2e} (tol {TG_RT_REL_TOL})",
            couette.join(", ")
        ),
    );
}

#[test]
fn criterion_6_toy_cascade() {
    let _g = lock();
    let start = Instant::now();
    let fit = fit_amplification_exponent(&ToySweep::standard()).unwrap();
    let mut pass = fit.c > 1.0 && fit.c < 4.0;
    let mut parts = Vec::new();
    for eta in [64.0, 256.0, 1024.0] {
        let r = cascade_gain(eta, fit.c).unwrap();
        pass &= r.stirling_relative_gap() <= CASCADE_REL_TOL;
        parts.push(format!("eta {eta}: gap {:.3}", r.stirling_relative_gap()));
    }
    report(
        6,
        "toy amplification exponent and cascade vs Stirling envelope",
        pass,
        start.elapsed(),
        Duration::from_secs(30),
        &format!(
            "c = {:.4} in (1, 4); {}; tolerance {CASCADE_REL_TOL}",
            fit.c,
            parts.join(", ")
        ),
    );
}

fn discard(_: &nonlinear::snapshot::Snapshot) -> stratflow_core::Result<()> {
    Ok(())
}

fn blob(eps: f64, nonlinear: bool, t_end: f64, output_every: usize) -> SimConfig {
    SimConfig {
        t_end,
        output_every,
        ..SimConfig::gaussian_blob(eps, nonlinear)
    }
}

fn max_rel_gap(a: &nonlinear::RunOutput, b: &nonlinear::RunOutput, labels: &[&str]) -> f64 {
    labels
        .iter()
        .map(|l| {
            let (sa, sb) = (a.series(l).unwrap(), b.series(l).unwrap());
            sa.values()
                .zip(sb.values())
                .filter(|(_, y)| *y != 0.0)
                .map(|(x, y)| (x - y).abs() / y.abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_7_nonlinear_consistency() {
    let _g = lock();
    let start = Instant::now();
    // (a) linear run against the per-mode oracle
    let cfg = SimConfig {
        dt: 0.005,
        ..blob(1e-2, false, 10.0, 200)
    };
    let solver = Solver::new(&cfg).unwrap();
    let init = solver.initial_state();
    let out = nonlinear::run_from(&solver, init.clone(), &mut discard).unwrap();
    let (fin, t_final) = (&out.final_state, out.final_state.t);
    let k_cut = (2 * cfg.nx / 3 / 2) as i64;
    let j_cut = (2 * cfg.ny / 3 / 2) as i64;
    let scale = init.theta.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut gap_a: f64 = 0.0;
    for k in 0..=k_cut {
        for j in -j_cut..=j_cut {
            let (om0, th0) = init.coefficient(k, j);
            if om0.norm() == 0.0 && th0.norm() == 0.0 {
                continue;
            }
            let m = Mode::new(k, j as f64 * cfg.eta_spacing());
            let want = evolve_mode(
                &ModeState::new(om0, th0, 0.0),
                m,
                &cfg.params,
                0.0,
                t_final,
                1e-12,
            )
            .unwrap();
            let (om, th) = fin.coefficient(k, j);
            gap_a = gap_a.max(((om - want.omega).norm() + (th - want.theta).norm()) / scale);
        }
    }
    let pass_a = gap_a <= LINEAR_MATCH_TOL;

    // (b) inviscid nonlinear eps = 1e-2 run over [0, 50]
    let cfg = blob(1e-2, true, 50.0, 1);
    let out = nonlinear::run(&cfg, discard).unwrap();
    let mt = out.series("mean_theta").unwrap();
    let t0 = mt.samples()[0].1;
    let drift_theta = mt.values().map(|v| (v - t0).abs()).fold(0.0, f64::max) / t0.abs();
    let omega_ref = out
        .series("omega_neq")
        .unwrap()
        .values()
        .fold(0.0, f64::max)
        * (2.0 * PI * cfg.ly).sqrt();
    let drift_omega = out
        .series("mean_omega")
        .unwrap()
        .values()
        .map(f64::abs)
        .fold(0.0, f64::max)
        / omega_ref;
    let h = out.series("energy").unwrap().samples().to_vec();
    let dh = out.series("dH_dt").unwrap().samples().to_vec();
    let rs = out.series("reynolds_stress").unwrap().samples().to_vec();
    let h_max = h.iter().map(|s| s.1).fold(0.0, f64::max);
    let pointwise = dh
        .iter()
        .zip(&rs)
        .map(|(a, b)| (a.1 - b.1).abs())
        .fold(0.0, f64::max)
        / h_max;
    // integrated form: H(t) − H(0) against the Simpson integral of the stress
    let mut integrated: f64 = 0.0;
    let mut acc = 0.0;
    for i in (2..h.len()).step_by(2) {
        let dt = rs[i].0 - rs[i - 2].0;
        acc += dt / 6.0 * (rs[i - 2].1 + 4.0 * rs[i - 1].1 + rs[i].1);
        integrated = integrated.max((h[i].1 - h[0].1 - acc).abs() / h_max);
    }
    let pass_b = drift_theta <= MEANS_REL_TOL
        && drift_omega <= MEANS_REL_TOL
        && pointwise <= ENERGY_REL_TOL
        && integrated <= ENERGY_REL_TOL;

    // (c) eps = 1e-3 nonlinear vs linearized up to t = 0.1/eps
    let eps = 1e-3;
    let t_end = 0.1 / eps;
    let nl = nonlinear::run(&blob(eps, true, t_end, 20), discard).unwrap();
    let lin = nonlinear::run(&blob(eps, false, t_end, 20), discard).unwrap();
    let labels = ["theta_neq", "ux_neq", "uy", "omega_neq", "grad_theta_neq"];
    let gap_c = max_rel_gap(&nl, &lin, &labels);
    let pass_c = gap_c <= LINEARIZED_REL_TOL;

    report(
        7,
        "nonlinear solver consistency (a) linear oracle (b) invariants (c) linearized window",
        pass_a && pass_b && pass_c,
        start.elapsed(),
        Duration::from_secs(600),
        &format!(
            "(a) max coefficient gap {gap_a:.2e} (tol {LINEAR_MATCH_TOL:e}); \
             (b) mean theta drift {drift_theta:.2e}, mean omega {drift_omega:.2e} (tol {MEANS_REL_TOL:e}), \
             dH/dt vs stress {pointwise:.2e}, integrated {integrated:.2e} (tol {ENERGY_REL_TOL:e}); \
             (c) max relative norm gap {gap_c:.2e} to t = {t_end} (tol {LINEARIZED_REL_TOL})"
        ),
    );
}

fn final_state(cfg: &SimConfig) -> SimState {
    nonlinear::run(cfg, discard).unwrap().final_state
}

#[test]
fn criterion_8_determinism_and_order() {
    let _g = lock();
    let start = Instant::now();
    let cfg = SimConfig {
        snapshot_every: Some(50),
        ..blob(1e-2, true, 10.0, 10)
    };
    let mut snaps_a = Vec::new();
    let mut snaps_b = Vec::new();
    let a = nonlinear::run(&cfg, |s| {
        snaps_a.extend(s.to_bytes());
        Ok(())
    })
    .unwrap();
    let b = nonlinear::run(&cfg, |s| {
        snaps_b.extend(s.to_bytes());
        Ok(())
    })
    .unwrap();
    let bits = |o: &nonlinear::RunOutput| -> Vec<u64> {
        o.series
            .iter()
            .flat_map(|s| {
                s.samples()
                    .iter()
                    .flat_map(|(t, v)| [t.to_bits(), v.to_bits()])
            })
            .collect()
    };
    let identical = snaps_a == snaps_b && bits(&a) == bits(&b);

    // dt halving on a strongly nonlinear reference run
    let reference = |dt: f64| SimConfig {
        nx: 64,
        ny: 128,
        dt,
        t_end: 4.0,
        output_every: 1,
        eps: 0.5,
        ..SimConfig::gaussian_blob(0.5, true)
    };
    let dts = [0.02, 0.01, 0.005, 0.0025];
    let norms: Vec<[f64; 3]> = dts
        .iter()
        .map(|&dt| {
            let cfg = reference(dt);
            let s = final_state(&cfg);
            let n = Solver::new(&cfg).unwrap().norms(&s);
            [n.omega, n.uy, n.grad_theta]
        })
        .collect();
    // observed order of each norm from successive halvings
    let orders: Vec<f64> = (0..3)
        .flat_map(|q| {
            let d: Vec<f64> = (0..3)
                .map(|i| (norms[i][q] - norms[i + 1][q]).abs())
                .collect();
            (0..2).map(move |i| (d[i] / d[i + 1]).log2())
        })
        .collect();
    let order_ok = orders
        .iter()
        .all(|p| *p >= ORDER_RANGE.0 && *p <= ORDER_RANGE.1);
    let shown: Vec<String> = orders.iter().map(|p| format!("{p:.3}")).collect();
    report(
        8,
        "determinism and fourth-order dt convergence",
        identical && order_ok,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "repeated runs bit-identical: {identical}; observed orders (omega, uy, grad theta; dt 0.02 to 0.0025) {} (want [{}, {}])",
            shown.join(", "),
            ORDER_RANGE.0,
            ORDER_RANGE.1
        ),
    );
}
