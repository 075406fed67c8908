//! Adaptive integrators for two-component complex linear systems `y' = A(t) y`.
//!
//! [`dopri45`] is the default (Dormand–Prince 5(4), FSAL, error measured
//! relative to the state norm). [`radau5`] is the 3-stage Radau IIA collocation
//! method with step-doubling error control, used when the diagonal dissipative
//! part is stiff.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Vec2 = [Complex64; 2];
pub type Mat2 = [[Complex64; 2]; 2];

const MAX_STEPS: usize = 50_000_000;

fn apply(a: &Mat2, y: &Vec2) -> Vec2 {
    [
        a[0][0] * y[0] + a[0][1] * y[1],
        a[1][0] * y[0] + a[1][1] * y[1],
    ]
}

fn axpy(y: &Vec2, h: f64, terms: &[(f64, &Vec2)]) -> Vec2 {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

fn norm(y: &Vec2) -> f64 {
    (y[0].norm_sqr() + y[1].norm_sqr()).sqrt()
}

fn mat_norm(a: &Mat2) -> f64 {
    a.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

fn min_step(t: f64) -> f64 {
    1e-14 * t.abs().max(1.0)
}

fn initial_step<F: Fn(f64) -> Mat2>(a: &F, t0: f64, t1: f64) -> f64 {
    let scale = mat_norm(&a(t0)).max(1e-12);
    (0.01 / scale).min(t1 - t0)
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = A(t) y` from `t0` to `t1` with relative tolerance `rtol`.
pub fn dopri45<F: Fn(f64) -> Mat2>(a: F, y0: Vec2, t0: f64, t1: f64, rtol: f64) -> Result<Vec2> {
    if t1 == t0 || norm(&y0) == 0.0 {
        return Ok(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = initial_step(&a, t0, t1);
    let mut k1 = apply(&a(t), &y);
    for _ in 0..MAX_STEPS {
        if t >= t1 {
            return Ok(y);
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = apply(&a(t + C2 * h), &axpy(&y, h, &[(A21, &k1)]));
        let k3 = apply(&a(t + C3 * h), &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = apply(
            &a(t + C4 * h),
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = apply(
            &a(t + C5 * h),
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = apply(
            &a(t + h),
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = apply(&a(t + h), &y_new);
        let err_vec = axpy(
            &[Complex64::new(0.0, 0.0); 2],
            h,
            &[
                (E1, &k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
        );
        let scale = rtol * norm(&y).max(norm(&y_new)) + f64::MIN_POSITIVE;
        let err = norm(&err_vec) / scale;
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < min_step(t) {
            return Err(Error::IntegratorStall { t, h });
        }
    }
    Err(Error::IntegratorStall { t, h })
}

struct RadauTableau {
    c: [f64; 3],
    a: [[f64; 3]; 3],
}

fn radau_tableau() -> RadauTableau {
    let s6 = 6f64.sqrt();
    RadauTableau {
        c: [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
        a: [
            [
                (88.0 - 7.0 * s6) / 360.0,
                (296.0 - 169.0 * s6) / 1800.0,
                (-2.0 + 3.0 * s6) / 225.0,
            ],
            [
                (296.0 + 169.0 * s6) / 1800.0,
                (88.0 + 7.0 * s6) / 360.0,
                (-2.0 - 3.0 * s6) / 225.0,
            ],
            [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
        ],
    }
}

fn radau_step<F: Fn(f64) -> Mat2>(
    a: &F,
    tab: &RadauTableau,
    t: f64,
    y: &Vec2,
    h: f64,
) -> Option<Vec2> {
    // Stages Y_i = y + h Σ_j a_ij A(t + c_j h) Y_j, solved as one 6×6 system.
    let mats: Vec<Mat2> = tab.c.iter().map(|c| a(t + c * h)).collect();
    let mut m = Matrix6::<Complex64>::identity();
    let mut rhs = Vector6::<Complex64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for r in 0..2 {
                for s in 0..2 {
                    m[(2 * i + r, 2 * j + s)] -= mats[j][r][s] * (h * tab.a[i][j]);
                }
            }
        }
        rhs[2 * i] = y[0];
        rhs[2 * i + 1] = y[1];
    }
    let sol = m.lu().solve(&rhs)?;
    // stiffly accurate: last stage is the step result
    Some([sol[4], sol[5]])
}

/// Radau IIA (order 5) for stiff `y' = A(t) y`, step-doubling error control.
pub fn radau5<F: Fn(f64) -> Mat2>(a: F, y0: Vec2, t0: f64, t1: f64, rtol: f64) -> Result<Vec2> {
    if t1 == t0 || norm(&y0) == 0.0 {
        return Ok(y0);
    }
    let tab = radau_tableau();
    let mut t = t0;
    let mut y = y0;
    let mut h = (t1 - t0).min(1.0);
    for _ in 0..MAX_STEPS {
        if t >= t1 {
            return Ok(y);
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let full = radau_step(&a, &tab, t, &y, h);
        let half = radau_step(&a, &tab, t, &y, 0.5 * h)
            .and_then(|mid| radau_step(&a, &tab, t + 0.5 * h, &mid, 0.5 * h));
        match (full, half) {
            (Some(full), Some(fine)) => {
                let diff = [fine[0] - full[0], fine[1] - full[1]];
                let scale = rtol * norm(&y).max(norm(&fine)) + f64::MIN_POSITIVE;
                let err = norm(&diff) / 31.0 / scale;
                if err <= 1.0 {
                    t = if last { t1 } else { t + h };
                    // Richardson extrapolation of the two estimates
                    y = [fine[0] + diff[0] / 31.0, fine[1] + diff[1] / 31.0];
                    let fac = if err == 0.0 {
                        4.0
                    } else {
                        (0.9 * err.powf(-1.0 / 6.0)).clamp(0.2, 4.0)
                    };
                    h *= fac;
                } else {
                    h *= (0.9 * err.powf(-1.0 / 6.0)).clamp(0.1, 0.9);
                }
            }
            _ => h *= 0.5,
        }
        if h < min_step(t) {
            return Err(Error::IntegratorStall { t, h });
        }
    }
    Err(Error::IntegratorStall { t, h })
}
