//! Design equations of the two-coupler cloner: asymmetry `q` to coupler
//! reflectances, and the theoretical fidelity trade-offs.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

const SCAN_EPS: f64 = 1e-9;
const SCAN_INTERVALS: usize = 1000;
const ROOT_TOL: f64 = 1e-12;

/// Residual of the cubic whose roots give the reflectance `R0` of the coupler
/// shared by signal and ancilla:
/// `R0(1−R0) + [R0(2q−1) − q](2R0−1)²`.
pub fn cubic_residual(q: f64, r0: f64) -> f64 {
    r0 * (1.0 - r0) + (r0 * (2.0 * q - 1.0) - q) * (2.0 * r0 - 1.0).powi(2)
}

fn cubic_derivative(q: f64, r0: f64) -> f64 {
    let s = 2.0 * r0 - 1.0;
    1.0 - 2.0 * r0 + (2.0 * q - 1.0) * s * s + 4.0 * (r0 * (2.0 * q - 1.0) - q) * s
}

/// Reflectance of the second coupler given `q` and `R0`:
/// `R1 = q(1−R0) / (q(1−R0) + (1−q)R0)`.
pub fn second_reflectance(q: f64, r0: f64) -> f64 {
    let num = q * (1.0 - r0);
    let den = num + (1.0 - q) * r0;
    if den == 0.0 {
        // 0/0 at (q = 1, R0 = 1); the continuous extension along the design curve is 1.
        1.0
    } else {
        num / den
    }
}

/// Bisection refined by Newton steps that stay inside the bracket.
fn bracketed_root(q: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = cubic_residual(q, lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = cubic_residual(q, x);
        if fx.abs() < ROOT_TOL * 1e-3 || hi - lo < 1e-16 {
            break;
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let d = cubic_derivative(q, x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// All roots of the cubic inside `(0, 1)`, found by scanning for sign changes.
pub fn cubic_roots_in_unit_interval(q: f64) -> Vec<f64> {
    let step = (1.0 - 2.0 * SCAN_EPS) / SCAN_INTERVALS as f64;
    let grid: Vec<f64> = (0..=SCAN_INTERVALS)
        .map(|k| SCAN_EPS + step * k as f64)
        .collect();
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (cubic_residual(q, a), cubic_residual(q, b));
        if fa == 0.0 {
            roots.push(a);
        } else if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
            roots.push(bracketed_root(q, a, b));
        }
    }
    if let Some(&last) = grid.last() {
        if cubic_residual(q, last) == 0.0 {
            roots.push(last);
        }
    }
    roots
}

/// Coupler reflectances realizing one asymmetry, with the ideal fidelities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloneDesign {
    pub q: f64,
    pub r0: f64,
    pub r1: f64,
    pub f_a: f64,
    pub f_b: f64,
}

/// Solves the design equations for `q`, choosing the root with `R0 > 1/2`
/// (the ancilla then goes mostly to clone B).
pub fn solve_reflectances(q: f64) -> Result<CloneDesign> {
    check_unit("q", q)?;
    let (f_a, f_b) = theoretical_fidelities(q)?;
    if q == 1.0 {
        // Double root at R0 = 1.
        return Ok(CloneDesign {
            q,
            r0: 1.0,
            r1: 1.0,
            f_a,
            f_b,
        });
    }
    let admissible: Vec<f64> = cubic_roots_in_unit_interval(q)
        .into_iter()
        .filter(|&r0| r0 > 0.5 && (0.0..=1.0).contains(&second_reflectance(q, r0)))
        .collect();
    match admissible.as_slice() {
        [r0] => Ok(CloneDesign {
            q,
            r0: *r0,
            r1: second_reflectance(q, *r0),
            f_a,
            f_b,
        }),
        // Within SCAN_EPS of q = 1 the root merges with R0 = 1 and the scan
        // cannot resolve it.
        [] if 1.0 - q < 1e-9 => Ok(CloneDesign {
            q,
            r0: 1.0,
            r1: 1.0,
            f_a,
            f_b,
        }),
        roots => Err(Error::Internal(format!(
            "expected one admissible root for q = {q}, found {roots:?}"
        ))),
    }
}

/// Ideal clone fidelities `((1+√q)/2, (1+√(1−q))/2)`.
pub fn theoretical_fidelities(q: f64) -> Result<(f64, f64)> {
    check_unit("q", q)?;
    Ok((0.5 * (1.0 + q.sqrt()), 0.5 * (1.0 + (1.0 - q).sqrt())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloneFamily {
    PhaseCovariant,
    Universal,
}

impl CloneFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            CloneFamily::PhaseCovariant => "phase_covariant",
            CloneFamily::Universal => "universal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub f_a: f64,
    pub f_b: f64,
    pub parameter: f64,
    pub family: CloneFamily,
}

/// Optimal universal asymmetric cloner, parameterized by `p ∈ [0, 1]`.
pub fn universal_tradeoff(p: f64) -> Result<TradeoffPoint> {
    check_unit("p", p)?;
    let den = 2.0 * (1.0 - p + p * p);
    Ok(TradeoffPoint {
        f_a: 1.0 - (1.0 - p).powi(2) / den,
        f_b: 1.0 - p * p / den,
        parameter: p,
        family: CloneFamily::Universal,
    })
}

fn uniform_grid(n: usize) -> impl Iterator<Item = f64> {
    let last = (n - 1) as f64;
    (0..n).map(move |k| if k == n - 1 { 1.0 } else { k as f64 / last })
}

/// Phase-covariant fidelity pairs for `n_points` values of `q` spread uniformly over `[0, 1]`.
pub fn pc_tradeoff_curve(n_points: usize) -> Result<Vec<TradeoffPoint>> {
    if n_points < 2 {
        return Err(Error::OutOfRange {
            name: "n_points",
            value: n_points as f64,
        });
    }
    uniform_grid(n_points)
        .map(|q| {
            let (f_a, f_b) = theoretical_fidelities(q)?;
            Ok(TradeoffPoint {
                f_a,
                f_b,
                parameter: q,
                family: CloneFamily::PhaseCovariant,
            })
        })
        .collect()
}

pub fn universal_tradeoff_curve(n_points: usize) -> Result<Vec<TradeoffPoint>> {
    if n_points < 2 {
        return Err(Error::OutOfRange {
            name: "n_points",
            value: n_points as f64,
        });
    }
    uniform_grid(n_points).map(universal_tradeoff).collect()
}

/// `F_B` of the optimal universal cloner at a given `F_A ∈ [1/2, 1]`.
pub fn universal_f_b_at(f_a: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&f_a) {
        return Err(Error::OutOfRange {
            name: "F_A",
            value: f_a,
        });
    }
    // F_A is increasing in p on [0, 1].
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if universal_tradeoff(mid)?.f_a < f_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(universal_tradeoff(0.5 * (lo + hi))?.f_b)
}
