//! Between-event flow `d psi/dt = (-i H_a - Lambda_a/2) psi` and location of
//! the time at which the squared norm crosses a target.

use crate::hybrid::{HybridModel, Label};
use crate::linalg::{dense_matvec, norm_sqr, CMatrix, Operator, C64, I, ONE, ZERO};

/// Largest dimension for which the RK4 propagator of a full step is
/// precomputed as a dense matrix.
const STEP_MATRIX_MAX_DIM: usize = 256;

/// Reusable integrator for one model and step size.
pub(crate) struct DriftEngine<'m> {
    model: &'m HybridModel,
    dt: f64,
    step_matrix: Vec<Option<CMatrix>>,
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
    tmp: Vec<C64>,
    probe: Vec<C64>,
}

fn generator_dense(model: &HybridModel, label: Label, lambda: &Operator) -> CMatrix {
    model.hamiltonian(label).to_dense() * (-I) - lambda.to_dense() * C64::new(0.5, 0.0)
}

/// `sum_{j<=4} (K h)^j / j!`, the propagator of one RK4 step of a linear
/// autonomous equation.
fn rk4_matrix(k: &CMatrix, h: f64) -> CMatrix {
    let n = k.nrows();
    let kh = k * C64::new(h, 0.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for j in 1..=4 {
        term = &term * &kh * C64::new(1.0 / j as f64, 0.0);
        sum += &term;
    }
    sum
}

impl<'m> DriftEngine<'m> {
    pub fn new(model: &'m HybridModel, dt: f64) -> Self {
        let n = model.max_dim();
        let step_matrix = (0..model.labels())
            .map(|a| {
                let label = Label(a);
                let lambda = model.coupling().cached_lambda(label)?;
                let dense_h = matches!(model.hamiltonian(label), Operator::Dense(_));
                let d = model.dim(label);
                (d <= STEP_MATRIX_MAX_DIM && (dense_h || d <= 8)).then(|| rk4_matrix(&generator_dense(model, label, lambda), dt))
            })
            .collect();
        DriftEngine {
            model,
            dt,
            step_matrix,
            k: std::array::from_fn(|_| vec![ZERO; n]),
            stage: vec![ZERO; n],
            tmp: vec![ZERO; n],
            probe: vec![ZERO; n],
        }
    }

    pub fn model(&self) -> &'m HybridModel {
        self.model
    }

    /// `y = (-i H - Lambda(t)/2) x`.
    fn generator(model: &HybridModel, label: Label, t: f64, x: &[C64], y: &mut [C64], tmp: &mut [C64]) {
        model.hamiltonian(label).apply(x, y);
        for v in y.iter_mut() {
            *v *= -I;
        }
        let fam = model.coupling();
        match fam.cached_lambda(label) {
            Some(l) => l.apply(x, tmp),
            None => fam.lambda_of(label, t).expect("label in range").apply(x, tmp),
        }
        for (v, w) in y.iter_mut().zip(tmp.iter()) {
            *v -= w * 0.5;
        }
    }

    /// One classical RK4 step of size `h` from `(t, x)` into `y`.
    pub fn rk4(&mut self, label: Label, t: f64, h: f64, x: &[C64], y: &mut [C64]) {
        let d = x.len();
        let model = self.model;
        let [k1, k2, k3, k4] = &mut self.k;
        let (k1, k2, k3, k4) = (&mut k1[..d], &mut k2[..d], &mut k3[..d], &mut k4[..d]);
        let stage = &mut self.stage[..d];
        let tmp = &mut self.tmp[..d];

        Self::generator(model, label, t, x, k1, tmp);
        for i in 0..d {
            stage[i] = x[i] + k1[i] * (h / 2.0);
        }
        Self::generator(model, label, t + h / 2.0, stage, k2, tmp);
        for i in 0..d {
            stage[i] = x[i] + k2[i] * (h / 2.0);
        }
        Self::generator(model, label, t + h / 2.0, stage, k3, tmp);
        for i in 0..d {
            stage[i] = x[i] + k3[i] * h;
        }
        Self::generator(model, label, t + h, stage, k4, tmp);
        for i in 0..d {
            y[i] = x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }

    /// Advances by `h`, using the precomputed propagator for full steps.
    pub fn step(&mut self, label: Label, t: f64, h: f64, x: &[C64], y: &mut [C64]) {
        match &self.step_matrix[label.0] {
            Some(p) if h == self.dt => dense_matvec(p, x, y),
            _ => self.rk4(label, t, h, x, y),
        }
    }

    /// Given `|x|^2 > target >= |x(t + h)|^2`, bisects for the crossing time
    /// inside the step. Writes the state at the crossing into `y` and
    /// returns the elapsed time from `t`.
    pub fn locate(&mut self, label: Label, t: f64, h: f64, target: f64, x: &[C64], y: &mut [C64]) -> f64 {
        let d = x.len();
        let mut probe = std::mem::take(&mut self.probe);
        let (mut lo, mut hi) = (0.0, h);
        let mut s = h;
        let mut best = f64::INFINITY;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            self.rk4(label, t, mid, x, &mut probe[..d]);
            let f = norm_sqr(&probe[..d]) - target;
            if f.abs() < best {
                best = f.abs();
                s = mid;
                y[..d].copy_from_slice(&probe[..d]);
            }
            if f.abs() <= 1e-13 {
                break;
            }
            if f > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best == f64::INFINITY {
            self.rk4(label, t, s, x, &mut y[..d]);
        }
        self.probe = probe;
        s
    }
}

/// Scales `x` to unit norm in place and returns the old norm.
pub(crate) fn normalize(x: &mut [C64]) -> f64 {
    let n = norm_sqr(x).sqrt();
    if n > 0.0 {
        let inv = ONE / n;
        for v in x.iter_mut() {
            *v *= inv;
        }
    }
    n
}
