use serde::{Deserialize, Serialize};

use super::{Outputs, RunError};
use crate::csv;
use crate::hybrid::{CouplingEntry, CouplingFamily, HilbertSpace, HybridDensityState, HybridModel, HybridPureState, Label};
use crate::linalg::{CMatrix, CVector, Operator, C64};
use crate::master::{evolve_density, TimeGrid};
use crate::par::Execution;
use crate::pdp::{ensemble_average, EnsembleConfig};

/// Rows of `[re, im]` pairs.
pub type Matrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub dim: usize,
    /// Zero when omitted.
    #[serde(default)]
    pub hamiltonian: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub to: usize,
    pub from: usize,
    pub matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub label: usize,
    /// Normalized on ingestion.
    pub psi: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Master,
    Pdp,
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomParams {
    pub labels: Vec<LabelSpec>,
    #[serde(default)]
    pub couplings: Vec<CouplingSpec>,
    pub initial: InitialSpec,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "thousand")]
    pub trajectories: usize,
    #[serde(default)]
    pub mode: Mode,
}

fn one() -> usize {
    1
}

fn thousand() -> usize {
    1000
}

fn matrix(m: &Matrix, rows: usize, what: &str) -> Result<CMatrix, RunError> {
    if m.len() != rows || m.iter().any(|r| r.len() != rows) {
        return Err(RunError::Validation(format!("{what} must be {rows}x{rows}")));
    }
    Ok(CMatrix::from_fn(rows, rows, |r, c| C64::new(m[r][c][0], m[r][c][1])))
}

fn coupling_matrix(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<CMatrix, RunError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(RunError::Validation(format!("{what} must be {rows}x{cols}")));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| C64::new(m[r][c][0], m[r][c][1])))
}

impl CustomParams {
    pub fn model(&self) -> Result<HybridModel, RunError> {
        let dims: Vec<usize> = self.labels.iter().map(|l| l.dim).collect();
        let hams = self
            .labels
            .iter()
            .enumerate()
            .map(|(a, l)| match &l.hamiltonian {
                Some(h) => matrix(h, l.dim, &format!("hamiltonian of label {a}")).map(Operator::Dense),
                None => Ok(Operator::Dense(CMatrix::zeros(l.dim, l.dim))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let entries = self
            .couplings
            .iter()
            .map(|c| {
                let (&rows, &cols) = match (dims.get(c.to), dims.get(c.from)) {
                    (Some(r), Some(k)) => (r, k),
                    _ => return Err(RunError::Validation(format!("coupling {} <- {} names a missing label", c.to, c.from))),
                };
                let m = coupling_matrix(&c.matrix, rows, cols, &format!("coupling {} <- {}", c.to, c.from))?;
                Ok(CouplingEntry::new(Label(c.to), Label(c.from), Operator::Dense(m)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let fam = CouplingFamily::new(&dims, entries)?;
        Ok(HybridModel::new(dims.iter().map(|&d| HilbertSpace::Finite(d)).collect(), hams, fam)?)
    }

    pub fn initial_state(&self) -> Result<HybridPureState, RunError> {
        let psi = CVector::from_iterator(self.initial.psi.len(), self.initial.psi.iter().map(|z| C64::new(z[0], z[1])));
        Ok(HybridPureState::normalized(Label(self.initial.label), psi)?)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.labels.is_empty() || self.labels.iter().any(|l| l.dim == 0) {
            return Err(RunError::Validation("every label needs a positive dimension".into()));
        }
        let model = self.model()?;
        let init = self.initial_state()?;
        model.check_label(init.label)?;
        if init.psi.len() != model.dim(init.label) {
            return Err(RunError::Validation(format!("initial state must have length {}", model.dim(init.label))));
        }
        TimeGrid::new(self.t_final, self.dt, self.record_every)?;
        if self.trajectories == 0 {
            return Err(RunError::Validation("trajectories must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn run(&self, seed: u64, exec: Execution) -> Result<Outputs, RunError> {
        let model = self.model()?;
        let init = self.initial_state()?;
        let grid = TimeGrid::new(self.t_final, self.dt, self.record_every)?;
        let mut out = Outputs::default();
        let master = if self.mode != Mode::Pdp {
            let rho0 = HybridDensityState::from_pure(&init, &model)?;
            let (t, s): (Vec<f64>, Vec<HybridDensityState>) = evolve_density(&rho0, &model, &grid)?.into_iter().unzip();
            out.file("master.csv", csv::density_snapshots(&t, &s));
            Some((t, s))
        } else {
            None
        };
        if self.mode != Mode::Master {
            let cfg = EnsembleConfig { grid, trajectories: self.trajectories, master_seed: seed, execution: exec };
            let ens = ensemble_average(&model, &init, &cfg)?;
            out.file("pdp.csv", csv::density_snapshots(&ens.times, &ens.states));
            out.file("first_events.csv", csv::first_events(&ens.first_event_times));
            out.summary("total_events", ens.total_events);
            if let Some((_, m)) = &master {
                let dev = m.iter().zip(&ens.states).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
                out.summary("max_abs_deviation", dev);
            }
        }
        Ok(out)
    }
}
