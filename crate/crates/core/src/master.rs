//! Ensemble-level dynamics: the hybrid Liouville equation
//!
//! `d rho_a/dt = -i[H_a, rho_a] + sum_b g_{ab} rho_b g_{ab}^H - {Lambda_a, rho_a}/2`
//!
//! integrated with fixed-step RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{Coupling, HybridDensityState, HybridModel, Label};
use crate::linalg::{CMatrix, Operator, C64, I};

/// Fixed step grid shared by the master integrator and the trajectory engine.
///
/// Step `k` ends at `min(k dt, t_final)`; snapshots are taken every
/// `record_every` steps and always at `t_final`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
}

pub type MasterRunConfig = TimeGrid;

impl TimeGrid {
    pub fn new(t_final: f64, dt: f64, record_every: usize) -> Result<Self> {
        let grid = TimeGrid { t_final, dt, record_every };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidParameter(format!("T = {} must be non-negative", self.t_final)));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(Error::InvalidParameter(format!("dt = {} exceeds T = {}", self.dt, self.t_final)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        if self.t_final == 0.0 {
            0
        } else {
            (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps() {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }

    pub fn is_snapshot(&self, k: usize) -> bool {
        k.is_multiple_of(self.record_every) || k == self.steps()
    }

    /// Step indices at which snapshots are taken, starting with 0.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        (0..=self.steps()).filter(|&k| self.is_snapshot(k)).collect()
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshot_steps().into_iter().map(|k| self.time(k)).collect()
    }
}

/// Dense copies of every operator the right-hand side needs.
struct DenseModel<'a> {
    model: &'a HybridModel,
    h: Vec<CMatrix>,
    lambda: Vec<Option<CMatrix>>,
    gains: Vec<Vec<(usize, Option<CMatrix>)>>,
}

impl<'a> DenseModel<'a> {
    fn new(model: &'a HybridModel) -> Self {
        let n = model.labels();
        let fam = model.coupling();
        let h = (0..n).map(|a| model.hamiltonian(Label(a)).to_dense()).collect();
        let lambda = (0..n).map(|a| fam.cached_lambda(Label(a)).map(Operator::to_dense)).collect();
        let gains = (0..n)
            .map(|a| {
                fam.incoming(Label(a))
                    .map(|e| {
                        let g = match &e.op {
                            Coupling::Static(op) => Some(op.to_dense()),
                            Coupling::Dynamic(_) => None,
                        };
                        (e.from.0, g)
                    })
                    .collect()
            })
            .collect();
        DenseModel { model, h, lambda, gains }
    }

    fn rhs(&self, rho: &[CMatrix], t: f64) -> Vec<CMatrix> {
        let fam = self.model.coupling();
        (0..rho.len())
            .map(|a| {
                let r = &rho[a];
                let hr = &self.h[a] * r;
                let mut out = (&hr - hr.adjoint()) * (-I);
                let lambda = match &self.lambda[a] {
                    Some(l) => std::borrow::Cow::Borrowed(l),
                    None => std::borrow::Cow::Owned(fam.lambda_of(Label(a), t).expect("label in range").to_dense()),
                };
                let lr = &*lambda * r;
                out -= (&lr + lr.adjoint()) * C64::new(0.5, 0.0);
                for (entry, (b, g)) in fam.incoming(Label(a)).zip(&self.gains[a]) {
                    let g = match g {
                        Some(g) => std::borrow::Cow::Borrowed(g),
                        None => std::borrow::Cow::Owned(entry.op.at(t).to_dense()),
                    };
                    out += &*g * &rho[*b] * g.adjoint();
                }
                out
            })
            .collect()
    }
}

fn check_shapes(rho: &HybridDensityState, model: &HybridModel) -> Result<()> {
    if rho.blocks().len() != model.labels() {
        return Err(Error::shape("density state labels", model.labels(), rho.blocks().len()));
    }
    for (a, b) in rho.blocks().iter().enumerate() {
        let d = model.dim(Label(a));
        if b.nrows() != d || b.ncols() != d {
            return Err(Error::shape(format!("density block {a}"), format!("{d}x{d}"), format!("{}x{}", b.nrows(), b.ncols())));
        }
    }
    Ok(())
}

/// Time derivative of every density block.
pub fn liouville_rhs(rho: &HybridDensityState, model: &HybridModel, t: f64) -> Result<Vec<CMatrix>> {
    check_shapes(rho, model)?;
    Ok(DenseModel::new(model).rhs(rho.blocks(), t))
}

/// Eigenvalue below which a snapshot is rejected.
pub const POSITIVITY_GUARD: f64 = -1e-6;

/// Integrates the master equation and returns `(t, rho(t))` at every snapshot.
pub fn evolve_density(
    rho0: &HybridDensityState,
    model: &HybridModel,
    cfg: &MasterRunConfig,
) -> Result<Vec<(f64, HybridDensityState)>> {
    cfg.validate()?;
    check_shapes(rho0, model)?;
    let dense = DenseModel::new(model);
    let axpy = |x: &[CMatrix], k: &[CMatrix], h: f64| -> Vec<CMatrix> {
        x.iter().zip(k).map(|(a, b)| a + b * C64::new(h, 0.0)).collect()
    };

    let mut out = vec![(0.0, rho0.clone())];
    let mut rho: Vec<CMatrix> = rho0.blocks().to_vec();
    let steps = cfg.steps();
    for k in 1..=steps {
        let t0 = cfg.time(k - 1);
        let h = cfg.time(k) - t0;
        let k1 = dense.rhs(&rho, t0);
        let k2 = dense.rhs(&axpy(&rho, &k1, h / 2.0), t0 + h / 2.0);
        let k3 = dense.rhs(&axpy(&rho, &k2, h / 2.0), t0 + h / 2.0);
        let k4 = dense.rhs(&axpy(&rho, &k3, h), t0 + h);
        for (a, r) in rho.iter_mut().enumerate() {
            *r += (&k1[a] + (&k2[a] + &k3[a]) * C64::new(2.0, 0.0) + &k4[a]) * C64::new(h / 6.0, 0.0);
        }
        if cfg.is_snapshot(k) {
            let state = HybridDensityState::from_blocks_unchecked(rho.clone());
            let min_ev = state.min_eigenvalue();
            if min_ev < POSITIVITY_GUARD || !min_ev.is_finite() {
                return Err(Error::PositivityLost { t: cfg.time(k), min_eigenvalue: min_ev });
            }
            out.push((cfg.time(k), state));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::{CouplingEntry, CouplingFamily, HilbertSpace};

    fn decay_model(kappa: f64) -> HybridModel {
        let g = Operator::Dense(CMatrix::from_element(1, 1, C64::new(kappa.sqrt(), 0.0)));
        let fam = CouplingFamily::new(&[1, 1], vec![CouplingEntry::new(Label(0), Label(1), g)]).unwrap();
        HybridModel::new(vec![HilbertSpace::Finite(1); 2], vec![Operator::zeros(1), Operator::zeros(1)], fam).unwrap()
    }

    fn on_state() -> HybridDensityState {
        HybridDensityState::new(vec![CMatrix::zeros(1, 1), CMatrix::identity(1, 1)]).unwrap()
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let cfg = TimeGrid::new(1.0, 1e-3, 100).unwrap();
        let series = evolve_density(&on_state(), &decay_model(1.0), &cfg).unwrap();
        let (t, last) = series.last().unwrap();
        assert_eq!(*t, 1.0);
        assert!((last.trace(Label(1)) - (-1.0f64).exp()).abs() < 1e-6);
        assert!((last.trace(Label(0)) - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
        assert_eq!(series.len(), 11);
    }

    #[test]
    fn zero_time_returns_input() {
        let cfg = TimeGrid::new(0.0, 1e-3, 1).unwrap();
        let rho0 = on_state();
        let series = evolve_density(&rho0, &decay_model(1.0), &cfg).unwrap();
        assert_eq!(series, vec![(0.0, rho0)]);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |dt: f64| {
            let cfg = TimeGrid::new(1.0, dt, usize::MAX).unwrap();
            let s = evolve_density(&on_state(), &decay_model(1.0), &cfg).unwrap();
            (s.last().unwrap().1.trace(Label(1)) - (-1.0f64).exp()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn last_step_is_truncated() {
        let cfg = TimeGrid::new(1.0, 0.3, 1).unwrap();
        assert_eq!(cfg.steps(), 4);
        assert_eq!(cfg.snapshot_times(), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(1.0, 0.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 2.0, 1).is_err());
        assert!(TimeGrid::new(-1.0, 0.1, 1).is_err());
    }

    #[test]
    fn large_step_trips_positivity_guard() {
        let cfg = TimeGrid::new(20.0, 4.0, 1).unwrap();
        let err = evolve_density(&on_state(), &decay_model(1.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::PositivityLost { .. }));
    }
}
