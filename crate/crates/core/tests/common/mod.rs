//! Independent first-quantized oracle for the cloner circuit: the 4×4
//! single-photon transfer matrix is built by hand and two-photon output
//! amplitudes are enumerated with the permanent formula.
#![allow(dead_code)]

use cloner::design::CloneDesign;
use num_complex::Complex64;

pub type Mat4 = [[Complex64; 4]; 4];

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Transfer matrix `u[out][in]`: coupler (0, 2), coupler (1, 3), then output phases.
pub fn transfer_matrix(r0: f64, r1: f64, phases: [f64; 4]) -> Mat4 {
    let mut u = [[c(0.0); 4]; 4];
    for (i, j, refl) in [(0usize, 2usize, r0), (1, 3, r1)] {
        let (r, t) = (refl.sqrt(), (1.0 - refl).sqrt());
        u[i][i] = c(r);
        u[j][i] = c(t);
        u[i][j] = c(t);
        u[j][j] = c(-r);
    }
    for (out, row) in u.iter_mut().enumerate() {
        let ph = Complex64::from_polar(1.0, phases[out]);
        row.iter_mut().for_each(|x| *x *= ph);
    }
    u
}

/// Output amplitudes `[A rail][B rail]` for the signal `α0|s0⟩ + α1|s1⟩` and the
/// ancilla in mode 2; A rails are modes 0/1 and B rails modes 2/3.
pub fn permanent_oracle(u: &Mat4, alpha: [Complex64; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[c(0.0); 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let (x, y) = (a, 2 + b);
            for (s, al) in alpha.iter().enumerate() {
                *cell += al * (u[x][s] * u[y][2] + u[y][s] * u[x][2]);
            }
        }
    }
    out
}

/// Conditional clone map of the bare couplers, written out term by term:
/// `|0⟩ → (R0 − T0)|00⟩`, `|1⟩ → r0 r1|10⟩ − t0 t1|01⟩`.
pub fn two_line_map(d: &CloneDesign, alpha: [Complex64; 2]) -> [[Complex64; 2]; 2] {
    let (r0, r1) = (d.r0.sqrt(), d.r1.sqrt());
    let (t0, t1) = ((1.0 - d.r0).sqrt(), (1.0 - d.r1).sqrt());
    let mut out = [[c(0.0); 2]; 2];
    out[0][0] = alpha[0] * (d.r0 - (1.0 - d.r0));
    out[1][0] = alpha[1] * (r0 * r1);
    out[0][1] = alpha[1] * (-t0 * t1);
    out
}

pub fn max_diff(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}
