//! Complex linear algebra used throughout the crate.
//!
//! Operators come in three storage forms: dense matrices, diagonal
//! (multiplication) operators on a grid, and the fourth-order central
//! difference generator `-i v d/dx` for transport on a 1D grid. All of them
//! apply to plain slices so the trajectory integrators can run without
//! allocating.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `-i v d/dx` discretized with the fourth-order central stencil.
///
/// The stencil is antisymmetric (with zero padding when the grid is not
/// periodic), so the operator is Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportGenerator {
    pub points: usize,
    pub spacing: f64,
    pub velocity: f64,
    pub periodic: bool,
}

impl TransportGenerator {
    fn at(&self, x: &[C64], i: isize) -> C64 {
        let n = self.points as isize;
        if self.periodic {
            x[i.rem_euclid(n) as usize]
        } else if (0..n).contains(&i) {
            x[i as usize]
        } else {
            ZERO
        }
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let c = -I * (self.velocity / (12.0 * self.spacing));
        for (i, yi) in y.iter_mut().enumerate() {
            let i = i as isize;
            let d = (self.at(x, i + 1) - self.at(x, i - 1)) * 8.0
                - (self.at(x, i + 2) - self.at(x, i - 2));
            *yi = c * d;
        }
    }
}

/// A linear map between two finite-dimensional spaces.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Dense(CMatrix),
    /// Multiplication by a function sampled on the grid.
    Diagonal(CVector),
    Transport(TransportGenerator),
}

impl Operator {
    pub fn zeros(n: usize) -> Self {
        Operator::Diagonal(CVector::zeros(n))
    }

    pub fn rows(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::Diagonal(d) => d.len(),
            Operator::Transport(t) => t.points,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Operator::Dense(m) => m.ncols(),
            Operator::Diagonal(d) => d.len(),
            Operator::Transport(t) => t.points,
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(y.len(), self.rows());
        match self {
            Operator::Dense(m) => dense_matvec(m, x, y),
            Operator::Diagonal(d) => {
                for ((yi, di), xi) in y.iter_mut().zip(d.iter()).zip(x) {
                    *yi = di * xi;
                }
            }
            Operator::Transport(t) => t.apply(x, y),
        }
    }

    /// `y = A^H x`.
    pub fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.rows());
        debug_assert_eq!(y.len(), self.cols());
        match self {
            Operator::Dense(m) => {
                let rows = m.nrows();
                for (j, yj) in y.iter_mut().enumerate() {
                    let col = &m.as_slice()[j * rows..(j + 1) * rows];
                    *yj = col.iter().zip(x).map(|(a, b)| a.conj() * b).sum();
                }
            }
            Operator::Diagonal(d) => {
                for ((yi, di), xi) in y.iter_mut().zip(d.iter()).zip(x) {
                    *yi = di.conj() * xi;
                }
            }
            // Hermitian.
            Operator::Transport(t) => t.apply(x, y),
        }
    }

    pub fn apply_vec(&self, x: &CVector) -> CVector {
        let mut y = CVector::zeros(self.rows());
        self.apply(x.as_slice(), y.as_mut_slice());
        y
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Operator::Dense(m) => m.clone(),
            Operator::Diagonal(d) => CMatrix::from_diagonal(d),
            Operator::Transport(t) => {
                let n = t.points;
                let mut m = CMatrix::zeros(n, n);
                let mut e = vec![ZERO; n];
                let mut col = vec![ZERO; n];
                for j in 0..n {
                    e[j] = ONE;
                    t.apply(&e, &mut col);
                    m.column_mut(j).copy_from_slice(&col);
                    e[j] = ZERO;
                }
                m
            }
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Dense(m) => Operator::Dense(m.adjoint()),
            Operator::Diagonal(d) => Operator::Diagonal(d.map(|z| z.conj())),
            Operator::Transport(t) => Operator::Transport(t.clone()),
        }
    }

    /// `A^H A`, kept diagonal when `A` is.
    pub fn gram(&self) -> Operator {
        match self {
            Operator::Diagonal(d) => Operator::Diagonal(d.map(|z| C64::new(z.norm_sqr(), 0.0))),
            other => {
                let m = other.to_dense();
                Operator::Dense(hermitian_part(&(m.adjoint() * &m)))
            }
        }
    }

    /// Sum of two square operators of equal size.
    pub fn add(&self, other: &Operator) -> Operator {
        match (self, other) {
            (Operator::Diagonal(a), Operator::Diagonal(b)) => Operator::Diagonal(a + b),
            (a, b) => Operator::Dense(a.to_dense() + b.to_dense()),
        }
    }

    /// Largest deviation from Hermiticity, `max |A - A^H|`.
    pub fn hermitian_deviation(&self) -> f64 {
        match self {
            Operator::Dense(m) => max_abs(&(m - m.adjoint())),
            Operator::Diagonal(d) => d.iter().map(|z| 2.0 * z.im.abs()).fold(0.0, f64::max),
            Operator::Transport(_) => 0.0,
        }
    }

    /// Replaces the operator by its Hermitian part `(A + A^H)/2`.
    pub fn symmetrized(self) -> Operator {
        match self {
            Operator::Dense(m) => Operator::Dense(hermitian_part(&m)),
            Operator::Diagonal(d) => Operator::Diagonal(d.map(|z| C64::new(z.re, 0.0))),
            t @ Operator::Transport(_) => t,
        }
    }

    /// Upper bound on the operator norm, used for step-size diagnostics.
    pub fn norm_bound(&self) -> f64 {
        match self {
            Operator::Dense(m) => m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            Operator::Diagonal(d) => d.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Operator::Transport(t) => 1.5 * t.velocity.abs() / t.spacing,
        }
    }
}

/// Operator-valued function of time, `g(t)`.
#[derive(Clone)]
pub struct TimeDependent {
    rows: usize,
    cols: usize,
    eval: Arc<dyn Fn(f64) -> Operator + Send + Sync>,
}

impl TimeDependent {
    /// Wraps `eval`; the shape is taken from `eval(0.0)` and every later
    /// evaluation must keep it.
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(f64) -> Operator + Send + Sync + 'static,
    {
        let probe = eval(0.0);
        TimeDependent {
            rows: probe.rows(),
            cols: probe.cols(),
            eval: Arc::new(eval),
        }
    }

    pub fn at(&self, t: f64) -> Operator {
        let op = (self.eval)(t);
        debug_assert_eq!((op.rows(), op.cols()), (self.rows, self.cols));
        op
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

impl fmt::Debug for TimeDependent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeDependent({}x{})", self.rows, self.cols)
    }
}

pub(crate) fn dense_matvec(m: &CMatrix, x: &[C64], y: &mut [C64]) {
    let rows = m.nrows();
    let data = m.as_slice();
    if rows == 2 && m.ncols() == 2 {
        y[0] = data[0] * x[0] + data[2] * x[1];
        y[1] = data[1] * x[0] + data[3] * x[1];
        return;
    }
    y.fill(ZERO);
    for (j, xj) in x.iter().enumerate() {
        let col = &data[j * rows..(j + 1) * rows];
        for (yi, a) in y.iter_mut().zip(col) {
            *yi += a * xj;
        }
    }
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Pauli matrices `(sigma_x, sigma_y, sigma_z)`.
pub fn pauli() -> [CMatrix; 3] {
    [
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

pub fn projector(dim: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(k, k)] = ONE;
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_vec(n: usize, seed: f64) -> Vec<C64> {
        (0..n)
            .map(|k| C64::new((seed * (k as f64 + 1.3)).sin(), (seed * 0.7 * k as f64).cos()))
            .collect()
    }

    #[test]
    fn transport_generator_is_hermitian() {
        for periodic in [true, false] {
            let t = Operator::Transport(TransportGenerator {
                points: 12,
                spacing: 0.1,
                velocity: 1.0,
                periodic,
            });
            assert!(t.to_dense().iter().all(|z| z.is_finite()));
            assert!(Operator::Dense(t.to_dense()).hermitian_deviation() < 1e-12);
        }
    }

    #[test]
    fn adjoint_application_matches_dense_adjoint() {
        let m = CMatrix::from_fn(3, 2, |i, j| C64::new(i as f64 - j as f64, 0.5 * (i * j) as f64));
        let op = Operator::Dense(m.clone());
        let x = sample_vec(3, 0.9);
        let mut y = vec![ZERO; 2];
        op.apply_adjoint(&x, &mut y);
        let expected = m.adjoint() * CVector::from_vec(x);
        for (a, b) in y.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn transport_derivative_of_plane_wave() {
        let n = 64;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let gen = TransportGenerator { points: n, spacing: h, velocity: 1.0, periodic: true };
        let x: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, 2.0 * j as f64 * h)).collect();
        let mut y = vec![ZERO; n];
        gen.apply(&x, &mut y);
        // -i d/dx e^{2ix} = 2 e^{2ix}
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b * 2.0).norm() < 1e-4);
        }
    }
}
