//! Proper-time detection model for a Dirac particle in 1+1 dimensions.
//!
//! Wave functions live on a periodic space-time lattice. The Dirac operator
//! is self-adjoint for the indefinite form `<Psi, Phi> = sum Psi^H g0 Phi dx dt`,
//! and the detector operator `G = g(x) (1 + g0)/2` gives a positive intensity
//! `<Psi, G^2 Psi>` even though the form itself is indefinite. Evolution in
//! proper time is generated by `-i D^2 / 2M - G^2 / 2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, I, ZERO};
use crate::rng::uniform;

/// Periodic lattice with `nx * nt` sites and two spinor components per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeGrid {
    pub nx: usize,
    pub nt: usize,
    pub lx: f64,
    pub lt: f64,
}

impl SpacetimeGrid {
    pub fn new(nx: usize, nt: usize, lx: f64, lt: f64) -> Result<Self> {
        if nx < 3 || nt < 3 || !(lx > 0.0) || !(lt > 0.0) || !lx.is_finite() || !lt.is_finite() {
            return Err(Error::InvalidParameter(format!("space-time grid {nx}x{nt} over {lx}x{lt}")));
        }
        Ok(SpacetimeGrid { nx, nt, lx, lt })
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dt(&self) -> f64 {
        self.lt / self.nt as f64
    }

    pub fn sites(&self) -> usize {
        self.nx * self.nt
    }

    /// Number of complex amplitudes.
    pub fn len(&self) -> usize {
        2 * self.sites()
    }

    pub fn is_empty(&self) -> bool {
        self.sites() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }

    pub fn t(&self, it: usize) -> f64 {
        it as f64 * self.dt()
    }

    fn site(&self, ix: usize, it: usize) -> usize {
        it * self.nx + ix
    }
}

/// Two-component spinor field on a [`SpacetimeGrid`]. Component `c` of site
/// `(ix, it)` is stored at `2 (it nx + ix) + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacetimeSpinor {
    grid: SpacetimeGrid,
    values: Vec<C64>,
}

impl SpacetimeSpinor {
    pub fn new(grid: SpacetimeGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape("spinor values", grid.len(), values.len()));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidState("spinor has non-finite values".into()));
        }
        Ok(SpacetimeSpinor { grid, values })
    }

    pub fn zeros(grid: &SpacetimeGrid) -> Self {
        SpacetimeSpinor { grid: grid.clone(), values: vec![ZERO; grid.len()] }
    }

    /// Samples `f(x, t) -> [upper, lower]` at every site.
    pub fn from_fn(grid: &SpacetimeGrid, f: impl Fn(f64, f64) -> [C64; 2]) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for it in 0..grid.nt {
            for ix in 0..grid.nx {
                values.extend(f(grid.x(ix), grid.t(it)));
            }
        }
        SpacetimeSpinor { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, ix: usize, it: usize) -> [C64; 2] {
        let s = 2 * self.grid.site(ix, it);
        [self.values[s], self.values[s + 1]]
    }

    pub fn scaled(&self, k: C64) -> Self {
        SpacetimeSpinor { grid: self.grid.clone(), values: self.values.iter().map(|v| v * k).collect() }
    }

    pub fn max_abs_diff(&self, other: &SpacetimeSpinor) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn inner_slices(a: &[C64], b: &[C64], cell: f64) -> C64 {
    let mut acc = ZERO;
    for (u, v) in a.chunks_exact(2).zip(b.chunks_exact(2)) {
        acc += u[0].conj() * v[0] - u[1].conj() * v[1];
    }
    acc * cell
}

/// `sum_sites Psi^H g0 Phi dx dt` with `g0 = diag(1, -1)`.
pub fn indefinite_inner(psi: &SpacetimeSpinor, phi: &SpacetimeSpinor) -> Result<C64> {
    if psi.grid != phi.grid {
        return Err(Error::GridMismatch);
    }
    Ok(inner_slices(&psi.values, &phi.values, psi.grid.dx() * psi.grid.dt()))
}

/// `<Psi, Psi>`, real by construction.
pub fn indefinite_norm(psi: &SpacetimeSpinor) -> f64 {
    inner_slices(&psi.values, &psi.values, psi.grid.dx() * psi.grid.dt()).re
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracModel {
    pub mass: f64,
    /// Mass parameter of the proper-time generator; `mass` when unset.
    pub proper_mass: Option<f64>,
    pub charge: f64,
    /// External potential components per site, zero when absent.
    pub a0: Option<Vec<f64>>,
    pub a1: Option<Vec<f64>>,
    /// Detector profile `g(x) >= 0`, one value per spatial column.
    pub g: Vec<f64>,
}

impl DiracModel {
    /// Free particle with no detector.
    pub fn free(mass: f64, grid: &SpacetimeGrid) -> Self {
        DiracModel { mass, proper_mass: None, charge: 1.0, a0: None, a1: None, g: vec![0.0; grid.nx] }
    }

    pub fn with_detector(mut self, grid: &SpacetimeGrid, g: impl Fn(f64) -> f64) -> Self {
        self.g = (0..grid.nx).map(|ix| g(grid.x(ix))).collect();
        self
    }

    pub fn proper_mass(&self) -> f64 {
        self.proper_mass.unwrap_or(self.mass)
    }

    pub fn validate(&self, grid: &SpacetimeGrid) -> Result<()> {
        if !self.mass.is_finite() || !self.charge.is_finite() {
            return Err(Error::InvalidParameter("mass and charge must be finite".into()));
        }
        let big_m = self.proper_mass();
        if !(big_m > 0.0) || !big_m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "proper-time mass M = {big_m} must be positive (set it explicitly when m = 0)"
            )));
        }
        if self.g.len() != grid.nx {
            return Err(Error::shape("detector profile", grid.nx, self.g.len()));
        }
        if self.g.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("detector profile must be finite and non-negative".into()));
        }
        for a in [&self.a0, &self.a1].into_iter().flatten() {
            if a.len() != grid.sites() {
                return Err(Error::shape("external potential", grid.sites(), a.len()));
            }
        }
        Ok(())
    }
}

fn dirac_into(model: &DiracModel, grid: &SpacetimeGrid, x: &[C64], y: &mut [C64]) {
    let (nx, nt) = (grid.nx, grid.nt);
    let cx = 1.0 / (2.0 * grid.dx());
    let ct = 1.0 / (2.0 * grid.dt());
    let e = model.charge;
    for it in 0..nt {
        let itp = (it + 1) % nt;
        let itm = (it + nt - 1) % nt;
        for ix in 0..nx {
            let ixp = (ix + 1) % nx;
            let ixm = (ix + nx - 1) % nx;
            let s = grid.site(ix, it);
            let at = |jx: usize, jt: usize, c: usize| x[2 * grid.site(jx, jt) + c];
            // Covariant derivatives (d_mu + i e A_mu) of each component.
            let mut dt = [ZERO; 2];
            let mut dxv = [ZERO; 2];
            for c in 0..2 {
                dt[c] = (at(ix, itp, c) - at(ix, itm, c)) * ct;
                dxv[c] = (at(ixp, it, c) - at(ixm, it, c)) * cx;
                if let Some(a0) = &model.a0 {
                    dt[c] += I * (e * a0[s]) * x[2 * s + c];
                }
                if let Some(a1) = &model.a1 {
                    dxv[c] += I * (e * a1[s]) * x[2 * s + c];
                }
            }
            // i g0 v = (i v0, -i v1), i g1 v = (i v1, -i v0).
            y[2 * s] = I * dt[0] + I * dxv[1] - x[2 * s] * model.mass;
            y[2 * s + 1] = -I * dt[1] - I * dxv[0] - x[2 * s + 1] * model.mass;
        }
    }
}

/// `D Psi` with second-order central differences.
pub fn dirac_apply(psi: &SpacetimeSpinor, model: &DiracModel) -> Result<SpacetimeSpinor> {
    model.validate(&psi.grid)?;
    let mut out = SpacetimeSpinor::zeros(&psi.grid);
    dirac_into(model, &psi.grid, &psi.values, &mut out.values);
    Ok(out)
}

/// The detector operator `G = g(x) (1 + g0)/2`, which keeps the upper
/// component and annihilates the lower one.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorOperator {
    g: Vec<f64>,
    nx: usize,
}

pub fn build_g(model: &DiracModel) -> Result<DetectorOperator> {
    if model.g.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParameter("detector profile must be non-negative".into()));
    }
    Ok(DetectorOperator { g: model.g.clone(), nx: model.g.len() })
}

impl DetectorOperator {
    fn scale_into(&self, power: i32, x: &[C64], y: &mut [C64]) {
        for (s, (u, v)) in x.chunks_exact(2).zip(y.chunks_exact_mut(2)).enumerate() {
            let g = self.g[s % self.nx].powi(power);
            v[0] = u[0] * g;
            v[1] = ZERO;
        }
    }

    fn check(&self, psi: &SpacetimeSpinor) -> Result<()> {
        if psi.grid.nx != self.nx {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn apply(&self, psi: &SpacetimeSpinor) -> Result<SpacetimeSpinor> {
        self.check(psi)?;
        let mut out = SpacetimeSpinor::zeros(&psi.grid);
        self.scale_into(1, &psi.values, &mut out.values);
        Ok(out)
    }

    /// `Lambda Psi = G^2 Psi`.
    pub fn lambda(&self, psi: &SpacetimeSpinor) -> Result<SpacetimeSpinor> {
        self.check(psi)?;
        let mut out = SpacetimeSpinor::zeros(&psi.grid);
        self.scale_into(2, &psi.values, &mut out.values);
        Ok(out)
    }

    /// Event intensity `<Psi, Lambda Psi>`.
    pub fn intensity(&self, psi: &SpacetimeSpinor) -> Result<f64> {
        self.check(psi)?;
        let cell = psi.grid.dx() * psi.grid.dt();
        let sum: f64 = psi
            .values
            .chunks_exact(2)
            .enumerate()
            .map(|(s, u)| self.g[s % self.nx].powi(2) * u[0].norm_sqr())
            .sum();
        Ok(sum * cell)
    }
}

/// Proper-time integrator with preallocated buffers.
struct ProperTime<'a> {
    model: &'a DiracModel,
    grid: SpacetimeGrid,
    g: DetectorOperator,
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
    tmp: Vec<C64>,
}

impl<'a> ProperTime<'a> {
    fn new(model: &'a DiracModel, grid: &SpacetimeGrid) -> Result<Self> {
        model.validate(grid)?;
        let n = grid.len();
        Ok(ProperTime {
            model,
            grid: grid.clone(),
            g: build_g(model)?,
            k: std::array::from_fn(|_| vec![ZERO; n]),
            stage: vec![ZERO; n],
            tmp: vec![ZERO; n],
        })
    }

    /// `y = (-i D^2 / 2M - Lambda/2) x`.
    fn generator(&mut self, which: usize, from_stage: bool, x: &[C64]) {
        let coef = -I / (2.0 * self.model.proper_mass());
        let src: &[C64] = if from_stage { &self.stage } else { x };
        dirac_into(self.model, &self.grid, src, &mut self.tmp);
        let y = &mut self.k[which];
        dirac_into(self.model, &self.grid, &self.tmp, y);
        let src: &[C64] = if from_stage { &self.stage } else { x };
        for (s, (yv, xv)) in y.chunks_exact_mut(2).zip(src.chunks_exact(2)).enumerate() {
            let g2 = self.g.g[s % self.g.nx].powi(2);
            yv[0] = yv[0] * coef - xv[0] * (0.5 * g2);
            yv[1] *= coef;
        }
    }

    fn rk4(&mut self, h: f64, x: &[C64], out: &mut [C64]) {
        for (which, step) in [(0, h / 2.0), (1, h / 2.0), (2, h)] {
            self.generator(which, which > 0, x);
            for ((s, xi), ki) in self.stage.iter_mut().zip(x).zip(&self.k[which]) {
                *s = xi + ki * step;
            }
        }
        self.generator(3, true, x);
        for i in 0..x.len() {
            out[i] = x[i] + (self.k[0][i] + (self.k[1][i] + self.k[2][i]) * 2.0 + self.k[3][i]) * (h / 6.0);
        }
    }
}

/// One RK4 step of `dPsi/dtau = (-i D^2 / 2M - Lambda/2) Psi`.
pub fn proper_time_step(psi: &SpacetimeSpinor, model: &DiracModel, dtau: f64) -> Result<SpacetimeSpinor> {
    if !(dtau > 0.0) {
        return Err(Error::InvalidParameter(format!("dtau = {dtau} must be positive")));
    }
    let mut pt = ProperTime::new(model, &psi.grid)?;
    let mut out = SpacetimeSpinor::zeros(&psi.grid);
    pt.rk4(dtau, &psi.values, &mut out.values);
    Ok(out)
}

/// Evolves for `tau` with steps of at most `dtau`; the last step is shortened.
pub fn evolve_proper_time(psi: &SpacetimeSpinor, model: &DiracModel, tau: f64, dtau: f64) -> Result<SpacetimeSpinor> {
    if !(dtau > 0.0) || !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau}, dtau = {dtau}")));
    }
    let mut pt = ProperTime::new(model, &psi.grid)?;
    let mut cur = psi.values.clone();
    let mut next = vec![ZERO; cur.len()];
    let steps = (tau / dtau - 1e-9).ceil().max(0.0) as usize;
    for k in 0..steps {
        let h = if k + 1 == steps { tau - k as f64 * dtau } else { dtau };
        pt.rk4(h, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(SpacetimeSpinor { grid: psi.grid.clone(), values: cur })
}

#[derive(Clone, Debug, PartialEq)]
pub enum RelativisticOutcome {
    /// The counter clicked at proper time `tau`; `psi` is `G Psi_tau`
    /// scaled to unit indefinite norm.
    Event { tau: f64, psi: SpacetimeSpinor },
    NoEvent { psi: SpacetimeSpinor },
}

impl RelativisticOutcome {
    pub fn tau(&self) -> Option<f64> {
        match self {
            RelativisticOutcome::Event { tau, .. } => Some(*tau),
            RelativisticOutcome::NoEvent { .. } => None,
        }
    }
}

/// Precomputed jump-free drift on a proper-time grid, reused for many draws.
///
/// A draw `p` produces an event at the first `tau` where `<Psi, Psi>` falls to
/// `1 - p`; the bracketing step is refined by bisection on RK4 sub-steps.
pub struct RelativisticSampler {
    model: DiracModel,
    grid: SpacetimeGrid,
    dtau: f64,
    taus: Vec<f64>,
    states: Vec<Vec<C64>>,
    norms: Vec<f64>,
}

impl RelativisticSampler {
    pub fn new(psi0: &SpacetimeSpinor, model: &DiracModel, tau_max: f64, dtau: f64) -> Result<Self> {
        if !(dtau > 0.0) || !(tau_max >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau_max = {tau_max}, dtau = {dtau}")));
        }
        let n0 = indefinite_norm(psi0);
        if (n0 - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("indefinite norm {n0} != 1")));
        }
        let mut pt = ProperTime::new(model, &psi0.grid)?;
        let steps = (tau_max / dtau - 1e-9).ceil().max(0.0) as usize;
        let mut taus = vec![0.0];
        let mut states = vec![psi0.values.clone()];
        let mut norms = vec![n0];
        let cell = psi0.grid.dx() * psi0.grid.dt();
        for k in 0..steps {
            let h = if k + 1 == steps { tau_max - k as f64 * dtau } else { dtau };
            let mut next = vec![ZERO; psi0.values.len()];
            pt.rk4(h, &states[k], &mut next);
            norms.push(inner_slices(&next, &next, cell).re);
            taus.push(taus[k] + h);
            states.push(next);
        }
        Ok(RelativisticSampler { model: model.clone(), grid: psi0.grid.clone(), dtau, taus, states, norms })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// `<Psi_tau, Psi_tau>` along the drift.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `1 - <Psi, Psi>(tau_max)`.
    pub fn event_probability(&self) -> f64 {
        1.0 - self.norms.last().copied().unwrap_or(1.0)
    }

    pub fn state(&self, k: usize) -> SpacetimeSpinor {
        SpacetimeSpinor { grid: self.grid.clone(), values: self.states[k].clone() }
    }

    pub fn sample(&self, p: f64) -> Result<RelativisticOutcome> {
        let target = 1.0 - p;
        let last = self.states.len() - 1;
        let Some(k) = self.norms.iter().position(|&n| n <= target) else {
            return Ok(RelativisticOutcome::NoEvent { psi: self.state(last) });
        };
        let cell = self.grid.dx() * self.grid.dt();
        let (tau, at) = if k == 0 {
            (0.0, self.states[0].clone())
        } else {
            let mut pt = ProperTime::new(&self.model, &self.grid)?;
            let x = &self.states[k - 1];
            let h = self.taus[k] - self.taus[k - 1];
            let (mut lo, mut hi) = (0.0, h);
            let mut probe = vec![ZERO; x.len()];
            let mut best = (h, self.states[k].clone(), f64::INFINITY);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                pt.rk4(mid, x, &mut probe);
                let f = inner_slices(&probe, &probe, cell).re - target;
                if f.abs() < best.2 {
                    best = (mid, probe.clone(), f.abs());
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
            (self.taus[k - 1] + best.0, best.1)
        };
        let g = build_g(&self.model)?;
        let mut post = SpacetimeSpinor::zeros(&self.grid);
        g.scale_into(1, &at, &mut post.values);
        let n = indefinite_norm(&post);
        if !(n > crate::pdp::MIN_INTENSITY) {
            return Err(Error::ZeroJumpIntensity { label: crate::hybrid::Label(0), t: tau });
        }
        Ok(RelativisticOutcome::Event { tau, psi: post.scaled(C64::new(1.0 / n.sqrt(), 0.0)) })
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }
}

/// Draws one uniform and returns the first event of the relativistic
/// process before `tau_max`, if any.
pub fn run_relativistic_pdp<R: Rng + ?Sized>(
    psi0: &SpacetimeSpinor,
    model: &DiracModel,
    tau_max: f64,
    dtau: f64,
    rng: &mut R,
) -> Result<RelativisticOutcome> {
    let p = uniform(rng);
    RelativisticSampler::new(psi0, model, tau_max, dtau)?.sample(p)
}

/// On-shell plane wave `u exp(i(p x - E t))` with `u = (E + m, p)`,
/// `p = 2 pi k / lx` and `E = +sqrt(p^2 + m^2)`.
pub fn plane_wave(grid: &SpacetimeGrid, mass: f64, k: i32) -> SpacetimeSpinor {
    let p = 2.0 * std::f64::consts::PI * k as f64 / grid.lx;
    let e = (p * p + mass * mass).sqrt();
    SpacetimeSpinor::from_fn(grid, |x, t| {
        let phase = C64::from_polar(1.0, p * x - e * t);
        [phase * (e + mass), phase * p]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::new(16, 12, 2.0 * PI, 2.0 * PI).unwrap()
    }

    /// Smooth spinor built from a few low Fourier modes.
    fn smooth(grid: &SpacetimeGrid, seed: u64) -> SpacetimeSpinor {
        let mut rng = crate::rng::stream(seed, 0);
        let mut modes = Vec::new();
        for kx in -2i32..=2 {
            for kt in -2i32..=2 {
                let c: [C64; 2] = std::array::from_fn(|_| C64::new(uniform(&mut rng) - 0.5, uniform(&mut rng) - 0.5));
                modes.push((kx, kt, c));
            }
        }
        let (lx, lt) = (grid.lx, grid.lt);
        SpacetimeSpinor::from_fn(grid, |x, t| {
            let mut v = [ZERO; 2];
            for (kx, kt, c) in &modes {
                let ph = C64::from_polar(1.0, 2.0 * PI * (*kx as f64 * x / lx + *kt as f64 * t / lt));
                v[0] += c[0] * ph;
                v[1] += c[1] * ph;
            }
            v
        })
    }

    #[test]
    fn indefinite_signature() {
        let g = grid();
        let up = SpacetimeSpinor::from_fn(&g, |_, _| [C64::new(1.0, 0.0), ZERO]);
        let down = SpacetimeSpinor::from_fn(&g, |_, _| [ZERO, C64::new(1.0, 0.0)]);
        assert!(indefinite_norm(&up) > 0.0);
        assert!(indefinite_norm(&down) < 0.0);
        let other = SpacetimeSpinor::zeros(&SpacetimeGrid::new(8, 8, 1.0, 1.0).unwrap());
        assert_eq!(indefinite_inner(&up, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn inner_is_hermitian_symmetric() {
        let g = grid();
        let (a, b) = (smooth(&g, 1), smooth(&g, 2));
        let ab = indefinite_inner(&a, &b).unwrap();
        let ba = indefinite_inner(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
    }

    #[test]
    fn dirac_is_self_adjoint_with_potential() {
        let g = grid();
        let mut model = DiracModel::free(0.7, &g);
        model.a0 = Some((0..g.sites()).map(|s| (s as f64 * 0.37).sin()).collect());
        model.a1 = Some((0..g.sites()).map(|s| (s as f64 * 0.11).cos()).collect());
        let (a, b) = (smooth(&g, 3), smooth(&g, 4));
        let lhs = indefinite_inner(&a, &dirac_apply(&b, &model).unwrap()).unwrap();
        let rhs = indefinite_inner(&dirac_apply(&a, &model).unwrap(), &b).unwrap();
        assert!((lhs - rhs).norm() < 1e-10, "{}", (lhs - rhs).norm());
    }

    #[test]
    fn massless_constant_is_annihilated() {
        let g = grid();
        let c = SpacetimeSpinor::from_fn(&g, |_, _| [C64::new(0.3, 0.1), C64::new(-1.0, 2.0)]);
        let model = DiracModel { proper_mass: Some(1.0), ..DiracModel::free(0.0, &g) };
        assert!(dirac_apply(&c, &model).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn plane_wave_residual_is_second_order() {
        let residual = |n: usize| {
            let g = SpacetimeGrid::new(n, n, 2.0 * PI, 2.0 * PI).unwrap();
            // p = 1, m = sqrt(3) gives E = 2, periodic in t over 2 pi.
            let m = 3f64.sqrt();
            let w = plane_wave(&g, m, 1);
            dirac_apply(&w, &DiracModel::free(m, &g)).unwrap().max_abs()
        };
        let (r1, r2, r3) = (residual(16), residual(32), residual(64));
        assert!(r1 / r2 > 3.5 && r2 / r3 > 3.5, "{r1} {r2} {r3}");
    }

    #[test]
    fn lambda_kills_lower_component() {
        let g = grid();
        let model = DiracModel::free(1.0, &g).with_detector(&g, |x| (x - 2.0).abs() + 0.1);
        let op = build_g(&model).unwrap();
        let down = SpacetimeSpinor::from_fn(&g, |_, _| [ZERO, C64::new(1.0, 0.0)]);
        assert_eq!(op.lambda(&down).unwrap().max_abs(), 0.0);
        let psi = smooth(&g, 5);
        let gg = op.apply(&op.apply(&psi).unwrap()).unwrap();
        assert!(gg.max_abs_diff(&op.lambda(&psi).unwrap()) < 1e-14);
        let direct = indefinite_inner(&psi, &op.lambda(&psi).unwrap()).unwrap();
        assert!((direct.re - op.intensity(&psi).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_detector_never_clicks() {
        let g = grid();
        let model = DiracModel::free(1.0, &g);
        let up = SpacetimeSpinor::from_fn(&g, |_, _| [C64::new(1.0, 0.0), ZERO]);
        let psi = up.scaled(C64::new(1.0 / indefinite_norm(&up).sqrt(), 0.0));
        let mut rng = crate::rng::stream(1, 1);
        for _ in 0..20 {
            let out = run_relativistic_pdp(&psi, &model, 0.2, 0.01, &mut rng).unwrap();
            assert!(out.tau().is_none());
        }
    }

    #[test]
    fn massless_needs_explicit_proper_mass() {
        let g = grid();
        let model = DiracModel::free(0.0, &g);
        assert!(proper_time_step(&smooth(&g, 1), &model, 0.01).is_err());
        let model = DiracModel { proper_mass: Some(1.0), ..model };
        assert!(proper_time_step(&smooth(&g, 1), &model, 0.01).is_ok());
    }
}
