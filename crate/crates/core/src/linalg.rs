//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Max-norm distance `max_ij |a_ij - b_ij|`.
pub fn max_dist(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Location and size of the largest entry-wise deviation.
pub fn worst_entry(a: &CMatrix, b: &CMatrix) -> (usize, usize, f64) {
    let mut best = (0, 0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = (a[(i, j)] - b[(i, j)]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    best
}

/// `max |U^dagger U - 1|`, valid for square matrices and isometries alike.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let mut err: f64 = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { ONE } else { ZERO };
            err = err.max((g[(i, j)] - target).norm());
        }
    }
    err
}

/// `exp(-i h t)` for a complex Hermitian `h`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t));
    let mut vd = v.clone();
    for (j, p) in phases.iter().enumerate() {
        for i in 0..vd.nrows() {
            vd[(i, j)] *= *p;
        }
    }
    vd * v.adjoint()
}

/// `exp(-i h t)` for a real symmetric `h`.
pub fn expm_real_symmetric(h: &DMatrix<f64>, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    phased_reconstruction(&eig.eigenvectors, &eig.eigenvalues, t)
}

/// `V diag(exp(-i lambda t)) V^T` for real orthogonal `V`.
pub fn phased_reconstruction(v: &DMatrix<f64>, lambda: &DVector<f64>, t: f64) -> CMatrix {
    let n = v.nrows();
    let phases: Vec<C64> = lambda
        .iter()
        .map(|l| C64::from_polar(1.0, -l * t))
        .collect();
    CMatrix::from_fn(n, n, |i, j| {
        let mut acc = ZERO;
        for k in 0..n {
            acc += phases[k] * (v[(i, k)] * v[(j, k)]);
        }
        acc
    })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Angle wrapped into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Absolute difference of two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Divide out the global phase carried by the largest-magnitude entry.
pub fn normalize_global_phase(m: &CMatrix) -> CMatrix {
    let mut best = ZERO;
    for z in m.iter() {
        if z.norm() > best.norm() {
            best = *z;
        }
    }
    if best.norm() == 0.0 {
        return m.clone();
    }
    let phase = best / best.norm();
    m.map(|z| z / phase)
}

/// Ascending eigen-decomposition of a real symmetric matrix.
pub fn sorted_symmetric_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}
