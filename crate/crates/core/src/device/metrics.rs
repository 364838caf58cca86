//! Gate metrics of a simulated block against the three-qubit FST gate with
//! free single-qubit Z rotations before and after the gate.

use serde::{Deserialize, Serialize};

use crate::device::propagate::Propagation;
use crate::error::{FstError, Result};
use crate::gates::effective_gate;
use crate::linalg::{wrap_angle, CMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    pub avg_fidelity: f64,
    pub infidelity: f64,
    pub leakage: f64,
    /// Free Z angles on `q1, q2, q3` applied after the gate.
    pub z_post: [f64; 3],
    /// Free Z angles on `q1, q2, q3` applied before the gate.
    pub z_pre: [f64; 3],
}

/// `K_3(theta)` in computational order `q1 q2 q3` (`q1` most significant).
pub fn target_gate(theta: f64) -> Result<CMatrix> {
    Ok(effective_gate(3, theta)?.matrix)
}

/// Target with the fixed corrections `exp(i theta/2 n)` on the outer qubits
/// and `exp(i theta n)` on the middle one applied after `K_3`.
pub fn corrected_target(theta: f64) -> Result<CMatrix> {
    Ok(z_layer([theta / 2.0, theta, theta / 2.0]) * target_gate(theta)?)
}

/// `diag(exp(i sum_q z_q x_q))` over the 8 computational states.
pub fn z_layer(z: [f64; 3]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_fn(8, |y, _| {
        C64::from_polar(1.0, phase(z, y))
    }))
}

fn phase(z: [f64; 3], y: usize) -> f64 {
    (0..3).filter(|q| y >> (2 - q) & 1 == 1).map(|q| z[q]).sum()
}

fn post_overlap(c: &[C64; 8], z: [f64; 3]) -> C64 {
    (0..8)
        .map(|y| c[y] * C64::from_polar(1.0, -phase(z, y)))
        .sum()
}

/// Post-gate angles maximizing `|sum_y exp(-i z.y) c_y|` by coordinate ascent.
fn best_post(c: &[C64; 8]) -> ([f64; 3], f64) {
    let rel = |y: usize| wrap_angle(c[y].arg() - c[0].arg());
    let mut starts = vec![[0.0; 3], [rel(4), rel(2), rel(1)]];
    for k in 1..4 {
        let a = std::f64::consts::PI * k as f64 / 2.0;
        starts.push([a, -a, a]);
    }
    let mut best = ([0.0; 3], -1.0);
    for mut z in starts {
        for _ in 0..200 {
            let before = post_overlap(c, z).norm();
            for q in 0..3 {
                let bit = 1 << (2 - q);
                let mut others = z;
                others[q] = 0.0;
                let (mut a, mut b) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for (y, cy) in c.iter().enumerate() {
                    let term = cy * C64::from_polar(1.0, -phase(others, y));
                    if y & bit == 0 {
                        a += term;
                    } else {
                        b += term;
                    }
                }
                if a.norm() > 0.0 && b.norm() > 0.0 {
                    z[q] = wrap_angle(b.arg() - a.arg());
                }
            }
            if post_overlap(c, z).norm() - before <= 1e-15 * before.max(1.0) {
                break;
            }
        }
        let v = post_overlap(c, z).norm();
        if v > best.1 {
            best = (z, v);
        }
    }
    best
}

/// Z angles `(post, pre)` maximizing `|Tr(V^dag M)|` for
/// `V = Z(post) target Z(pre)`. `K_3` conserves `n_2` and `n_1 + n_3`, so
/// a single pre-gate angle on `q1` is independent; it is found by a grid
/// and golden-section search, the post-gate angles by coordinate ascent.
pub fn optimal_z(block: &CMatrix, target: &CMatrix) -> ([f64; 3], [f64; 3]) {
    let eval = |d: f64| {
        let mut c = [C64::new(0.0, 0.0); 8];
        for (y, cy) in c.iter_mut().enumerate() {
            *cy = (0..8)
                .map(|x| {
                    target[(y, x)].conj()
                        * block[(y, x)]
                        * C64::from_polar(1.0, -phase([d, 0.0, 0.0], x))
                })
                .sum();
        }
        best_post(&c)
    };
    let pi = std::f64::consts::PI;
    let grid = 24;
    let step = 2.0 * pi / grid as f64;
    let (mut d0, mut f0) = (0.0, -1.0);
    for k in 0..grid {
        let d = -pi + k as f64 * step;
        let f = eval(d).1;
        if f > f0 {
            (d0, f0) = (d, f);
        }
    }
    let (mut a, mut b) = (d0 - step, d0 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (eval(x1).1, eval(x2).1);
    while b - a > 1e-10 {
        if f1 > f2 {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - g * (b - a);
            f1 = eval(x1).1;
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + g * (b - a);
            f2 = eval(x2).1;
        }
    }
    let d = if eval(0.5 * (a + b)).1 >= f0 {
        0.5 * (a + b)
    } else {
        d0
    };
    let (post, _) = eval(d);
    (post.map(wrap_angle), [wrap_angle(d), 0.0, 0.0])
}

/// Average fidelity of a (possibly leaky) 8x8 block against `target`.
pub fn average_fidelity(block: &CMatrix, target: &CMatrix) -> f64 {
    let kept: f64 = block.iter().map(|z| z.norm_sqr()).sum();
    let tr: C64 = target
        .iter()
        .zip(block.iter())
        .map(|(v, m)| v.conj() * m)
        .sum();
    (kept + tr.norm_sqr()) / 72.0
}

pub fn block_metrics(block: &CMatrix, theta: f64) -> Result<GateMetrics> {
    if block.nrows() != 8 || block.ncols() != 8 {
        return Err(FstError::Dimension {
            expected: 8,
            got: block.nrows(),
        });
    }
    let target = corrected_target(theta)?;
    let (z_post, z_pre) = optimal_z(block, &target);
    let v = z_layer(z_post) * &target * z_layer(z_pre);
    let avg_fidelity = average_fidelity(block, &v);
    let kept: f64 = block.iter().map(|z| z.norm_sqr()).sum();
    Ok(GateMetrics {
        avg_fidelity,
        infidelity: 1.0 - avg_fidelity,
        leakage: (1.0 - kept / 8.0).max(0.0),
        z_post,
        z_pre,
    })
}

pub fn gate_metrics(prop: &Propagation, theta: f64) -> Result<GateMetrics> {
    block_metrics(&prop.block, theta)
}
