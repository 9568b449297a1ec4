//! Hybrid classical-quantum states, operator families and the coupling
//! structure shared by the ensemble and trajectory levels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dirac::SpacetimeGrid;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, max_abs, min_eigenvalue, norm_sqr, CMatrix, CVector, Operator, TimeDependent, C64};

/// Index of a classical state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(pub usize);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Uniform 1D spatial grid. Points sit at `x_min + i * spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub periodic: bool,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, points: usize, periodic: bool) -> Result<Self> {
        let grid = Grid1D { x_min, x_max, points, periodic };
        let min_points = if periodic { 1 } else { 2 };
        if points < min_points || !(x_max > x_min) || !grid.spacing().is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid [{x_min}, {x_max}] with {points} points"
            )));
        }
        Ok(grid)
    }

    /// Periodic grids cover `[x_min, x_max)`; open grids include both ends.
    pub fn spacing(&self) -> f64 {
        let cells = if self.periodic { self.points } else { self.points.saturating_sub(1) };
        (self.x_max - self.x_min) / cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.x(i))
    }
}

/// The Hilbert space attached to one classical label.
///
/// Grid states are stored as `psi(x_i) * sqrt(dx)`, so the Euclidean norm of
/// the coefficient vector is the rectangle-rule norm of the wave function.
#[derive(Clone, Debug, PartialEq)]
pub enum HilbertSpace {
    Finite(usize),
    Grid(Grid1D),
    Spacetime(SpacetimeGrid),
}

impl HilbertSpace {
    pub fn dim(&self) -> usize {
        match self {
            HilbertSpace::Finite(d) => *d,
            HilbertSpace::Grid(g) => g.points,
            HilbertSpace::Spacetime(g) => g.len(),
        }
    }
}

/// A coupling operator `g_{to, from}`, fixed or time dependent.
#[derive(Clone, Debug)]
pub enum Coupling {
    Static(Operator),
    Dynamic(TimeDependent),
}

impl Coupling {
    pub fn at(&self, t: f64) -> std::borrow::Cow<'_, Operator> {
        match self {
            Coupling::Static(op) => std::borrow::Cow::Borrowed(op),
            Coupling::Dynamic(td) => std::borrow::Cow::Owned(td.at(t)),
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Coupling::Static(op) => op.rows(),
            Coupling::Dynamic(td) => td.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Coupling::Static(op) => op.cols(),
            Coupling::Dynamic(td) => td.cols(),
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Coupling::Static(_))
    }
}

/// `g_{to, from}`: maps the space of `from` into the space of `to`.
#[derive(Clone, Debug)]
pub struct CouplingEntry {
    pub to: Label,
    pub from: Label,
    pub op: Coupling,
}

impl CouplingEntry {
    pub fn new(to: Label, from: Label, op: Operator) -> Self {
        CouplingEntry { to, from, op: Coupling::Static(op) }
    }

    pub fn dynamic(to: Label, from: Label, op: TimeDependent) -> Self {
        CouplingEntry { to, from, op: Coupling::Dynamic(op) }
    }
}

/// Validated family of couplings with the event-intensity operators
/// `Lambda_a = sum_b g_{b a}^H g_{b a}` cached for labels whose outgoing
/// couplings are all time independent.
#[derive(Clone, Debug)]
pub struct CouplingFamily {
    dims: Vec<usize>,
    entries: Vec<CouplingEntry>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    lambda: Vec<Option<Operator>>,
}

impl CouplingFamily {
    /// Builds the family for labels `0..dims.len()` with the given space
    /// dimensions.
    pub fn new(dims: &[usize], entries: Vec<CouplingEntry>) -> Result<Self> {
        let count = dims.len();
        let check = |label: Label| {
            if label.0 < count {
                Ok(())
            } else {
                Err(Error::InvalidLabel { label, count })
            }
        };
        for e in &entries {
            check(e.to)?;
            check(e.from)?;
            if e.to == e.from {
                return Err(Error::DiagonalCouplingForbidden(e.from));
            }
            let (rows, cols) = (e.op.rows(), e.op.cols());
            if rows != dims[e.to.0] || cols != dims[e.from.0] {
                return Err(Error::shape(
                    format!("coupling {} <- {}", e.to, e.from),
                    format!("{}x{}", dims[e.to.0], dims[e.from.0]),
                    format!("{rows}x{cols}"),
                ));
            }
        }

        let mut entries = entries;
        entries.sort_by_key(|e| (e.from, e.to));
        if let Some(w) = entries.windows(2).find(|w| (w[0].from, w[0].to) == (w[1].from, w[1].to)) {
            return Err(Error::DuplicateCoupling { to: w[0].to, from: w[0].from });
        }

        let mut outgoing = vec![Vec::new(); count];
        let mut incoming = vec![Vec::new(); count];
        for (k, e) in entries.iter().enumerate() {
            outgoing[e.from.0].push(k);
            incoming[e.to.0].push(k);
        }

        let mut family = CouplingFamily {
            dims: dims.to_vec(),
            entries,
            outgoing,
            incoming,
            lambda: vec![None; count],
        };
        for label in 0..count {
            if family.outgoing[label].iter().all(|&k| family.entries[k].op.is_static()) {
                family.lambda[label] = Some(family.compute_lambda(Label(label), 0.0));
            }
        }
        Ok(family)
    }

    fn compute_lambda(&self, label: Label, t: f64) -> Operator {
        let mut acc = Operator::zeros(self.dims[label.0]);
        for &k in &self.outgoing[label.0] {
            acc = acc.add(&self.entries[k].op.at(t).gram());
        }
        acc.symmetrized()
    }

    pub fn labels(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[CouplingEntry] {
        &self.entries
    }

    /// Entries leaving `label`, in ascending order of the target label.
    pub fn outgoing(&self, label: Label) -> impl Iterator<Item = &CouplingEntry> {
        self.outgoing[label.0].iter().map(|&k| &self.entries[k])
    }

    pub fn incoming(&self, label: Label) -> impl Iterator<Item = &CouplingEntry> {
        self.incoming[label.0].iter().map(|&k| &self.entries[k])
    }

    pub fn is_absorbing(&self, label: Label) -> bool {
        self.outgoing[label.0].is_empty()
    }

    /// Cached `Lambda` for labels with time-independent outgoing couplings.
    pub fn cached_lambda(&self, label: Label) -> Option<&Operator> {
        self.lambda.get(label.0).and_then(Option::as_ref)
    }

    /// `Lambda_label(t)`.
    pub fn lambda_of(&self, label: Label, t: f64) -> Result<Operator> {
        if label.0 >= self.labels() {
            return Err(Error::InvalidLabel { label, count: self.labels() });
        }
        Ok(match self.cached_lambda(label) {
            Some(op) => op.clone(),
            None => self.compute_lambda(label, t),
        })
    }
}

/// Hamiltonians and couplings for every classical label.
#[derive(Clone, Debug)]
pub struct HybridModel {
    spaces: Vec<HilbertSpace>,
    hamiltonians: Vec<Operator>,
    coupling: CouplingFamily,
}

/// Hermiticity tolerance applied to user-supplied Hamiltonians.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

impl HybridModel {
    pub fn new(spaces: Vec<HilbertSpace>, hamiltonians: Vec<Operator>, coupling: CouplingFamily) -> Result<Self> {
        if hamiltonians.len() != spaces.len() || coupling.labels() != spaces.len() {
            return Err(Error::shape(
                "model labels",
                spaces.len(),
                format!("{} hamiltonians, {} coupling labels", hamiltonians.len(), coupling.labels()),
            ));
        }
        let mut checked = Vec::with_capacity(hamiltonians.len());
        for (k, (space, h)) in spaces.iter().zip(hamiltonians).enumerate() {
            let d = space.dim();
            if h.rows() != d || h.cols() != d || coupling.dims()[k] != d {
                return Err(Error::shape(format!("hamiltonian {k}"), format!("{d}x{d}"), format!("{}x{}", h.rows(), h.cols())));
            }
            let deviation = h.hermitian_deviation();
            if deviation > HERMITIAN_TOLERANCE {
                return Err(Error::NotHermitian { label: Label(k), deviation });
            }
            checked.push(h.symmetrized());
        }
        Ok(HybridModel { spaces, hamiltonians: checked, coupling })
    }

    pub fn labels(&self) -> usize {
        self.spaces.len()
    }

    pub fn dim(&self, label: Label) -> usize {
        self.spaces[label.0].dim()
    }

    pub fn max_dim(&self) -> usize {
        self.spaces.iter().map(HilbertSpace::dim).max().unwrap_or(0)
    }

    pub fn space(&self, label: Label) -> &HilbertSpace {
        &self.spaces[label.0]
    }

    pub fn hamiltonian(&self, label: Label) -> &Operator {
        &self.hamiltonians[label.0]
    }

    pub fn coupling(&self) -> &CouplingFamily {
        &self.coupling
    }

    pub fn check_label(&self, label: Label) -> Result<()> {
        if label.0 < self.labels() {
            Ok(())
        } else {
            Err(Error::InvalidLabel { label, count: self.labels() })
        }
    }
}

/// Individual-level state: a classical label and a vector in its space.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridPureState {
    pub label: Label,
    pub psi: CVector,
}

pub const NORM_TOLERANCE: f64 = 1e-10;

impl HybridPureState {
    /// Requires `psi` to be normalized already.
    pub fn new(label: Label, psi: CVector) -> Result<Self> {
        let n2 = norm_sqr(psi.as_slice());
        if (n2.sqrt() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("state norm {} != 1", n2.sqrt())));
        }
        Ok(HybridPureState { label, psi })
    }

    pub fn normalized(label: Label, psi: CVector) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero state".into()));
        }
        Ok(HybridPureState { label, psi: psi / C64::new(n, 0.0) })
    }
}

/// Ensemble-level state: one density block per classical label.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridDensityState {
    blocks: Vec<CMatrix>,
}

impl HybridDensityState {
    /// Validates Hermiticity, positivity (eigenvalues >= -1e-10) and unit total trace.
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        let state = HybridDensityState { blocks };
        if let Some((k, b)) = state.blocks.iter().enumerate().find(|(_, b)| !b.is_square()) {
            return Err(Error::shape(format!("density block {k}"), "square", format!("{}x{}", b.nrows(), b.ncols())));
        }
        let dev = state.hermitian_deviation();
        if dev > 1e-10 {
            return Err(Error::InvalidState(format!("density block not Hermitian (deviation {dev:e})")));
        }
        let min_ev = state.min_eigenvalue();
        if min_ev < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_ev:e}")));
        }
        let tr = state.total_trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("total trace {tr} != 1")));
        }
        Ok(state)
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<CMatrix>) -> Self {
        HybridDensityState { blocks }
    }

    pub fn from_pure(state: &HybridPureState, model: &HybridModel) -> Result<Self> {
        model.check_label(state.label)?;
        let blocks = (0..model.labels())
            .map(|k| {
                if k == state.label.0 {
                    &state.psi * state.psi.adjoint()
                } else {
                    let d = model.dim(Label(k));
                    CMatrix::zeros(d, d)
                }
            })
            .collect();
        Ok(HybridDensityState { blocks })
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, label: Label) -> &CMatrix {
        &self.blocks[label.0]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    pub fn trace(&self, label: Label) -> f64 {
        self.blocks[label.0].trace().re
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.blocks.iter().map(|b| max_abs(&(b - b.adjoint()))).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.nrows() > 0)
            .map(|b| min_eigenvalue(&hermitian_part(b)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest entrywise modulus of the difference between two states.
    pub fn max_abs_diff(&self, other: &HybridDensityState) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{projector, ONE};

    fn scalar(v: f64) -> Operator {
        Operator::Dense(CMatrix::from_element(1, 1, C64::new(v, 0.0)))
    }

    #[test]
    fn single_channel_lambda() {
        let kappa: f64 = 0.7;
        let fam = CouplingFamily::new(&[1, 1], vec![CouplingEntry::new(Label(0), Label(1), scalar(kappa.sqrt()))]).unwrap();
        let on = fam.lambda_of(Label(1), 0.0).unwrap().to_dense();
        let off = fam.lambda_of(Label(0), 0.0).unwrap().to_dense();
        assert!((on[(0, 0)] - C64::new(kappa, 0.0)).norm() < 1e-15);
        assert_eq!(off[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn empty_family_has_zero_lambda() {
        let fam = CouplingFamily::new(&[2, 3], vec![]).unwrap();
        for (k, d) in [(0, 2), (1, 3)] {
            let l = fam.lambda_of(Label(k), 1.0).unwrap().to_dense();
            assert_eq!(l, CMatrix::zeros(d, d));
        }
    }

    #[test]
    fn diagonal_coupling_rejected() {
        let err = CouplingFamily::new(&[1, 1], vec![CouplingEntry::new(Label(1), Label(1), scalar(1.0))]).unwrap_err();
        assert_eq!(err, Error::DiagonalCouplingForbidden(Label(1)));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let err = CouplingFamily::new(&[2, 1], vec![CouplingEntry::new(Label(0), Label(1), scalar(1.0))]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn two_channels_add() {
        let (k1, k2): (f64, f64) = (0.3, 1.9);
        let fam = CouplingFamily::new(
            &[2, 2, 2],
            vec![
                CouplingEntry::new(Label(1), Label(0), Operator::Dense(CMatrix::identity(2, 2) * C64::new(k1.sqrt(), 0.0))),
                CouplingEntry::new(Label(2), Label(0), Operator::Dense(CMatrix::identity(2, 2) * C64::new(k2.sqrt(), 0.0))),
            ],
        )
        .unwrap();
        let l = fam.lambda_of(Label(0), 0.0).unwrap().to_dense();
        let expected = CMatrix::identity(2, 2) * C64::new(k1 + k2, 0.0);
        assert!(max_abs(&(l - expected)) < 1e-14);
    }

    #[test]
    fn projector_coupling() {
        let kappa: f64 = 2.5;
        let g = projector(2, 0) * C64::new(kappa.sqrt(), 0.0);
        let fam = CouplingFamily::new(&[2, 2], vec![CouplingEntry::new(Label(0), Label(1), Operator::Dense(g))]).unwrap();
        let l = fam.lambda_of(Label(1), 0.0).unwrap().to_dense();
        assert!(max_abs(&(l - projector(2, 0) * C64::new(kappa, 0.0))) < 1e-14);
    }

    #[test]
    fn time_dependent_lambda_not_cached() {
        let td = TimeDependent::new(|t| Operator::Diagonal(CVector::from_element(3, C64::new(t, 0.0))));
        let fam = CouplingFamily::new(&[3, 3], vec![CouplingEntry::dynamic(Label(0), Label(1), td)]).unwrap();
        assert!(fam.cached_lambda(Label(1)).is_none());
        let l = fam.lambda_of(Label(1), 2.0).unwrap();
        assert_eq!(l, Operator::Diagonal(CVector::from_element(3, C64::new(4.0, 0.0))));
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let h = Operator::Dense(CMatrix::from_row_slice(2, 2, &[ONE, ONE, C64::new(0.0, 0.0), ONE]));
        let fam = CouplingFamily::new(&[2], vec![]).unwrap();
        let err = HybridModel::new(vec![HilbertSpace::Finite(2)], vec![h], fam).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn density_state_validation() {
        let rho = CMatrix::from_row_slice(2, 2, &[C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.5, 0.0)]);
        assert!(HybridDensityState::new(vec![rho.clone(), CMatrix::zeros(1, 1)]).is_ok());
        assert!(HybridDensityState::new(vec![rho.clone() * C64::new(2.0, 0.0)]).is_err());
        let mut bad = rho;
        bad[(0, 0)] = C64::new(1.5, 0.0);
        bad[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(HybridDensityState::new(vec![bad]).is_err());
    }

    #[test]
    fn grid_spacing() {
        assert!((Grid1D::new(0.0, 1.0, 10, true).unwrap().spacing() - 0.1).abs() < 1e-15);
        assert!((Grid1D::new(0.0, 1.0, 11, false).unwrap().spacing() - 0.1).abs() < 1e-15);
        assert!(Grid1D::new(1.0, 0.0, 11, false).is_err());
    }
}
