//! Position detectors with two classical states, `OFF` and `ON`.
//!
//! An `ON` detector can register the particle and switch to `OFF`, after
//! which nothing else happens. The coupling is a Gaussian multiplication
//! operator normalized so that `int g^2 dx = kappa`; as the Gaussian narrows
//! the event rate tends to `kappa |psi(a)|^2`. For a particle moving at unit
//! speed the drift is solved exactly along characteristics, which gives an
//! oracle for the detection-time law independent of any grid integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{Coupling, CouplingEntry, CouplingFamily, Grid1D, HilbertSpace, HybridModel, HybridPureState, Label};
use crate::linalg::{projector, CMatrix, CVector, Operator, TimeDependent, TransportGenerator, C64, ONE, ZERO};
use crate::master::{evolve_density, TimeGrid};
use crate::par::Execution;
use crate::pdp::{first_event_times, sample_streams};
use crate::quad::integrate_with_breaks;
use crate::rng::uniform;
use crate::stats::{censored_exponential_rate, linear_fit};
use crate::HybridDensityState;

pub const OFF: Label = Label(0);
pub const ON: Label = Label(1);

/// Detector centre `a(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorPath {
    Fixed { a: f64 },
    Uniform { a0: f64, v: f64 },
}

impl DetectorPath {
    pub fn position(&self, t: f64) -> f64 {
        match *self {
            DetectorPath::Fixed { a } => a,
            DetectorPath::Uniform { a0, v } => a0 + v * t,
        }
    }

    pub fn velocity(&self) -> f64 {
        match *self {
            DetectorPath::Fixed { .. } => 0.0,
            DetectorPath::Uniform { v, .. } => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorProfile {
    pub kappa: f64,
    pub w: f64,
    pub path: DetectorPath,
}

impl DetectorProfile {
    pub fn new(kappa: f64, w: f64, path: DetectorPath) -> Result<Self> {
        let p = DetectorProfile { kappa, w, path };
        p.validate()?;
        Ok(p)
    }

    pub fn fixed(kappa: f64, w: f64, a: f64) -> Result<Self> {
        Self::new(kappa, w, DetectorPath::Fixed { a })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !(self.w > 0.0) || !self.kappa.is_finite() || !self.w.is_finite() {
            return Err(Error::InvalidParameter(format!("detector needs kappa > 0 and w > 0 (got {}, {})", self.kappa, self.w)));
        }
        Ok(())
    }

    /// Standard deviation of `g^2` viewed as a Gaussian in `x`.
    pub fn sigma(&self) -> f64 {
        0.5 / self.w.sqrt()
    }

    /// Coarsest grid spacing that resolves the profile.
    pub fn required_spacing(&self) -> f64 {
        0.25 / self.w.sqrt()
    }

    /// `g_t(x)^2 = kappa sqrt(2w/pi) exp(-2w (x - a(t))^2)`.
    pub fn g_squared(&self, x: f64, t: f64) -> f64 {
        let d = x - self.path.position(t);
        self.kappa * (2.0 * self.w / std::f64::consts::PI).sqrt() * (-2.0 * self.w * d * d).exp()
    }

    /// `int_{t0}^{t1} g_s(y + s)^2 ds`: the exposure of a point moving with
    /// unit speed that sits at `y` at time 0.
    pub fn exposure(&self, y: f64, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let sigma = self.sigma();
        let rel0 = y - self.path.position(0.0);
        let slip = 1.0 - self.path.velocity();
        // Distance to the detector along the path is rel0 + slip * s.
        let (r0, r1) = (rel0 + slip * t0, rel0 + slip * t1);
        let nearest = if r0 * r1 <= 0.0 { 0.0 } else { r0.abs().min(r1.abs()) };
        if nearest > 12.0 * sigma {
            return 0.0;
        }
        let f = |s: f64| self.g_squared(y + s, s);
        let mut breaks = Vec::new();
        if slip != 0.0 {
            let s_star = -rel0 / slip;
            let sigma_s = sigma / slip.abs();
            breaks.push(s_star);
            for k in [2.0, 4.0, 8.0] {
                breaks.push(s_star - k * sigma_s);
                breaks.push(s_star + k * sigma_s);
            }
        }
        integrate_with_breaks(&f, t0, t1, &breaks, 1e-9)
    }
}

/// Wave function sampled on a 1D grid (plain values `psi(x_i)`).
#[derive(Clone, Debug, PartialEq)]
pub struct Wavepacket1D {
    grid: Grid1D,
    values: Vec<C64>,
}

impl Wavepacket1D {
    /// Requires rectangle-rule norm 1 within 1e-10.
    pub fn new(grid: Grid1D, values: Vec<C64>) -> Result<Self> {
        let packet = Self::unnormalized(grid, values)?;
        let n = packet.norm_sqr();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("wave packet norm^2 {n} != 1")));
        }
        Ok(packet)
    }

    fn unnormalized(grid: Grid1D, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::shape("wave packet", grid.points, values.len()));
        }
        Ok(Wavepacket1D { grid, values })
    }

    /// Samples `f` and rescales to unit norm.
    pub fn normalized_from_fn(grid: &Grid1D, f: impl Fn(f64) -> C64) -> Result<Self> {
        let values: Vec<C64> = grid.xs().map(f).collect();
        let packet = Self::unnormalized(grid.clone(), values)?;
        let n = packet.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("wave packet vanishes on the grid".into()));
        }
        let k = 1.0 / n.sqrt();
        Ok(Wavepacket1D { values: packet.values.iter().map(|v| v * k).collect(), ..packet })
    }

    /// Gaussian with `|psi|^2` centred at `x0` with standard deviation
    /// `sigma`, carrying momentum `k0`.
    pub fn gaussian(grid: &Grid1D, x0: f64, sigma: f64, k0: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("packet width {sigma} must be positive")));
        }
        Self::normalized_from_fn(grid, |x| {
            let d = x - x0;
            C64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * x)
        })
    }

    /// Reads a trajectory state stored as `psi(x_i) sqrt(dx)`.
    pub fn from_state(grid: &Grid1D, state: &CVector) -> Result<Self> {
        let k = 1.0 / grid.spacing().sqrt();
        Self::unnormalized(grid.clone(), state.iter().map(|v| v * k).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Coefficient vector `psi(x_i) sqrt(dx)` used by the trajectory engine.
    pub fn to_state(&self) -> CVector {
        let k = self.grid.spacing().sqrt();
        CVector::from_iterator(self.values.len(), self.values.iter().map(|v| v * k))
    }

    /// Four-point Lagrange interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> C64 {
        let h = self.grid.spacing();
        let u = (x - self.grid.x_min) / h;
        let n = self.values.len() as isize;
        if u < -1.0 || u > n as f64 {
            return ZERO;
        }
        let i = u.floor() as isize;
        let s = u - i as f64;
        let at = |j: isize| if (0..n).contains(&j) { self.values[j as usize] } else { ZERO };
        let w = [
            -s * (s - 1.0) * (s - 2.0) / 6.0,
            (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0,
            (s + 1.0) * s * (s - 1.0) / 6.0,
        ];
        at(i - 1) * w[0] + at(i) * w[1] + at(i + 1) * w[2] + at(i + 2) * w[3]
    }
}

/// Builds the multiplication operator `g_t(x)` on `grid`.
pub fn gaussian_coupling(profile: &DetectorProfile, grid: &Grid1D) -> Result<Coupling> {
    profile.validate()?;
    let h = grid.spacing();
    if h > profile.required_spacing() {
        return Err(Error::GridTooCoarse { spacing: h, required: profile.required_spacing() });
    }
    let xs: Vec<f64> = grid.xs().collect();
    let sample = move |p: &DetectorProfile, t: f64| {
        Operator::Diagonal(CVector::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(p.g_squared(x, t).sqrt(), 0.0))))
    };
    Ok(match profile.path {
        DetectorPath::Fixed { .. } => Coupling::Static(sample(profile, 0.0)),
        DetectorPath::Uniform { .. } => {
            let p = *profile;
            Coupling::Dynamic(TimeDependent::new(move |t| sample(&p, t)))
        }
    })
}

/// Particle on `grid` moving with `velocity` (fourth-order difference
/// generator), watched by a Gaussian detector.
pub fn detector_model(grid: &Grid1D, profile: &DetectorProfile, velocity: f64) -> Result<HybridModel> {
    let g = gaussian_coupling(profile, grid)?;
    let h = Operator::Transport(TransportGenerator { points: grid.points, spacing: grid.spacing(), velocity, periodic: grid.periodic });
    let entry = CouplingEntry { to: OFF, from: ON, op: g };
    let fam = CouplingFamily::new(&[grid.points, grid.points], vec![entry])?;
    HybridModel::new(vec![HilbertSpace::Grid(grid.clone()); 2], vec![h.clone(), h], fam)
}

/// Drift of the unit-speed particle solved along characteristics:
/// `psi(x, t) = exp(-1/2 int_0^t g_s(x + s - t)^2 ds) psi0(x - t)`.
pub fn exact_transport_survival(psi0: &Wavepacket1D, profile: &DetectorProfile, t: f64) -> Result<Wavepacket1D> {
    // kappa = 0 is allowed here and reduces to pure translation.
    if !(profile.kappa >= 0.0) || !(profile.w > 0.0) {
        return Err(Error::InvalidParameter(format!("detector needs kappa >= 0 and w > 0 (got {}, {})", profile.kappa, profile.w)));
    }
    let values = psi0
        .grid
        .xs()
        .map(|x| {
            let y = x - t;
            let amp = psi0.interpolate(y);
            if amp == ZERO {
                ZERO
            } else {
                amp * (-0.5 * profile.exposure(y, 0.0, t)).exp()
            }
        })
        .collect();
    Wavepacket1D::unnormalized(psi0.grid.clone(), values)
}

/// Survival probability of the unit-speed particle tabulated on a uniform
/// time grid, computed by following each grid sample along its
/// characteristic: `S(t) = sum_j |psi0(y_j)|^2 exp(-int_0^t g_s(y_j + s)^2 ds) dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportSurvival {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
}

impl TransportSurvival {
    pub fn new(psi0: &Wavepacket1D, profile: &DetectorProfile, t_max: f64, steps: usize) -> Result<Self> {
        profile.validate()?;
        if !(t_max > 0.0) || steps == 0 {
            return Err(Error::InvalidParameter(format!("survival table needs t_max > 0 and steps > 0 (got {t_max}, {steps})")));
        }
        let times: Vec<f64> = (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect();
        let mut survival = vec![0.0; steps + 1];
        let h = psi0.grid.spacing();
        for (j, v) in psi0.values.iter().enumerate() {
            let mass = v.norm_sqr() * h;
            if mass == 0.0 {
                continue;
            }
            let y = psi0.grid.x(j);
            let mut exposure = 0.0;
            survival[0] += mass;
            for k in 1..=steps {
                exposure += profile.exposure(y, times[k - 1], times[k]);
                survival[k] += mass * (-exposure).exp();
            }
        }
        Ok(TransportSurvival { times, survival })
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("non-empty table")
    }

    /// `S(t)` by linear interpolation.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return self.survival[0];
        }
        if k >= self.times.len() {
            return *self.survival.last().expect("non-empty table");
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let f = (t - t0) / (t1 - t0);
        self.survival[k - 1] + f * (self.survival[k] - self.survival[k - 1])
    }

    /// Event time for the uniform draw `p`: the first `t` with
    /// `S(t) = S(0) - p`, or `None` if that happens after `t_max`.
    pub fn event_time(&self, p: f64) -> Option<f64> {
        let target = self.survival[0] - p;
        let k = self.survival.iter().position(|&s| s <= target)?;
        if k == 0 {
            return Some(0.0);
        }
        let (s0, s1) = (self.survival[k - 1], self.survival[k]);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        Some(t0 + (t1 - t0) * (s0 - target) / (s0 - s1))
    }

    /// One draw per trajectory from the stream `(master_seed, i)`.
    pub fn sample(&self, n: usize, master_seed: u64, exec: Execution) -> Result<Vec<Option<f64>>> {
        sample_streams(n, master_seed, exec, |_, rng| Ok(self.event_time(uniform(rng))))
    }
}

/// Detection probability by time `t` for a point detector at `a`:
/// `(1 - exp(-kappa)) int_{a-t}^{a} |psi0(x)|^2 dx`. Each grid value stands
/// for the cell `[x_i - dx/2, x_i + dx/2)`; partially covered cells count
/// in proportion to the overlap.
pub fn point_detector_cdf(psi0: &Wavepacket1D, kappa: f64, a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let h = psi0.grid.spacing();
    let (lo, hi) = (a - t, a);
    let mass: f64 = psi0
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = psi0.grid.x(i);
            let overlap = (hi.min(c + 0.5 * h) - lo.max(c - 0.5 * h)).max(0.0);
            v.norm_sqr() * overlap
        })
        .sum();
    (1.0 - (-kappa).exp()) * mass
}

/// Instantaneous event rate `(psi, Lambda_t psi) = int g_t^2 |psi|^2 dx`.
pub fn event_rate(psi: &Wavepacket1D, profile: &DetectorProfile, t: f64) -> f64 {
    let h = psi.grid.spacing();
    psi.values
        .iter()
        .enumerate()
        .map(|(i, v)| profile.g_squared(psi.grid.x(i), t) * v.norm_sqr())
        .sum::<f64>()
        * h
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornPoint {
    pub w: f64,
    pub rate: f64,
    pub target: f64,
    pub relative_error: f64,
}

/// Event rate of a fixed detector at `a` for each width parameter, against
/// the point limit `kappa |psi0(a)|^2`.
pub fn born_limit_scan(psi0: &Wavepacket1D, kappa: f64, a: f64, widths: &[f64]) -> Result<Vec<BornPoint>> {
    let target = kappa * psi0.interpolate(a).norm_sqr();
    widths
        .iter()
        .map(|&w| {
            let profile = DetectorProfile::fixed(kappa, w, a)?;
            if psi0.grid.spacing() > profile.required_spacing() {
                return Err(Error::GridTooCoarse { spacing: psi0.grid.spacing(), required: profile.required_spacing() });
            }
            let rate = event_rate(psi0, &profile, 0.0);
            Ok(BornPoint { w, rate, target, relative_error: (rate - target).abs() / target })
        })
        .collect()
}

/// Two-level system with Rabi Hamiltonian `omega sigma_x / 2` in both
/// detector states, watched through `g = sqrt(kappa) |1><1|`.
pub fn rabi_detector_model(omega: f64, kappa: f64) -> Result<HybridModel> {
    if !(kappa >= 0.0) || !omega.is_finite() || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("Rabi model needs finite omega and kappa >= 0 (got {omega}, {kappa})")));
    }
    let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]) * C64::new(0.5 * omega, 0.0);
    let entries = if kappa > 0.0 {
        vec![CouplingEntry::new(OFF, ON, Operator::Dense(projector(2, 1) * C64::new(kappa.sqrt(), 0.0)))]
    } else {
        Vec::new()
    };
    let fam = CouplingFamily::new(&[2, 2], entries)?;
    HybridModel::new(vec![HilbertSpace::Finite(2); 2], vec![Operator::Dense(h.clone()), Operator::Dense(h)], fam)
}

/// Detector on, system in `|0>`.
pub fn rabi_initial_state() -> HybridPureState {
    HybridPureState { label: ON, psi: CVector::from_vec(vec![ONE, ZERO]) }
}

/// Population decay rate of the slow mode of `omega sigma_x/2 - i kappa/2 |1><1|`
/// for `kappa > 2 omega`: `kappa/2 - sqrt(kappa^2/4 - omega^2)`.
pub fn zeno_slow_rate(omega: f64, kappa: f64) -> f64 {
    let disc = (0.25 * kappa * kappa - omega * omega).max(0.0);
    0.5 * kappa - disc.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZenoPoint {
    pub kappa: f64,
    pub rate: f64,
    pub events: usize,
    pub trajectories: usize,
}

/// Effective event rate for each coupling, from the first event times of
/// `n` trajectories censored at `t_max`.
pub fn zeno_scan(
    omega: f64,
    kappas: &[f64],
    t_max: f64,
    dt: f64,
    n: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<ZenoPoint>> {
    let grid = TimeGrid::new(t_max, dt, usize::MAX)?;
    kappas
        .iter()
        .enumerate()
        .map(|(k, &kappa)| {
            let model = rabi_detector_model(omega, kappa)?;
            let seed = crate::rng::derive_seed(master_seed, k as u64);
            let times = first_event_times(&model, &rabi_initial_state(), &grid, n, seed, exec)?;
            Ok(ZenoPoint {
                kappa,
                rate: censored_exponential_rate(&times, t_max),
                events: times.iter().flatten().count(),
                trajectories: n,
            })
        })
        .collect()
}

/// Decay rate of `Tr rho_on` from the master equation: slope of its
/// logarithm fitted over `[t_max/2, t_max]`.
pub fn master_decay_rate(omega: f64, kappa: f64, t_max: f64, dt: f64) -> Result<f64> {
    let model = rabi_detector_model(omega, kappa)?;
    let stride = ((t_max / dt) / 200.0).floor().max(1.0) as usize;
    let grid = TimeGrid::new(t_max, dt, stride)?;
    let rho0 = HybridDensityState::from_pure(&rabi_initial_state(), &model)?;
    let series = evolve_density(&rho0, &model, &grid)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|(t, _)| *t >= 0.5 * t_max)
        .map(|(t, s)| (*t, s.trace(ON).max(f64::MIN_POSITIVE).ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::InvalidParameter("too few snapshots to fit a decay rate".into()))?;
    Ok(-fit.slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(x_min: f64, x_max: f64, points: usize) -> Grid1D {
        Grid1D::new(x_min, x_max, points, false).unwrap()
    }

    #[test]
    fn coupling_integrates_to_kappa() {
        let grid = line(-3.0, 3.0, 1201);
        for (kappa, w) in [(1.0, 100.0), (0.3, 25.0), (4.0, 400.0)] {
            let p = DetectorProfile::new(kappa, w, DetectorPath::Uniform { a0: -0.5, v: 0.4 }).unwrap();
            let Coupling::Dynamic(g) = gaussian_coupling(&p, &grid).unwrap() else { panic!("moving detector") };
            for t in [0.0, 1.0, 2.0] {
                let Operator::Diagonal(d) = g.at(t) else { panic!("diagonal") };
                let total: f64 = d.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
                assert!((total - kappa).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn fixed_detector_is_static() {
        let p = DetectorProfile::fixed(1.0, 16.0, 0.0).unwrap();
        assert!(gaussian_coupling(&p, &line(-2.0, 2.0, 101)).unwrap().is_static());
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = DetectorProfile::fixed(1.0, 100.0, 0.0).unwrap();
        let err = gaussian_coupling(&p, &line(-1.0, 1.0, 21)).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn uniform_packet_cdf() {
        // Cells of width 0.01 tiling [-2, 2); the packet fills [-1, 0).
        let grid = line(-1.995, 1.995, 400);
        let packet = Wavepacket1D::new(grid.clone(), grid.xs().map(|x| if (-1.0..0.0).contains(&x) { ONE } else { ZERO }).collect()).unwrap();
        let p = point_detector_cdf(&packet, 1.0, 0.0, 0.5);
        assert!((p - (1.0 - (-1.0f64).exp()) * 0.5).abs() < 1e-6);
        assert_eq!(point_detector_cdf(&packet, 1.0, 0.0, 0.0), 0.0);
        assert!((point_detector_cdf(&packet, 60.0, 0.0, 1.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_translates() {
        let grid = line(-4.0, 4.0, 801);
        let psi0 = Wavepacket1D::gaussian(&grid, -1.0, 0.4, 2.0).unwrap();
        let mut p = DetectorProfile::fixed(1.0, 100.0, 0.0).unwrap();
        p.kappa = 0.0;
        let out = exact_transport_survival(&psi0, &p, 1.5).unwrap();
        let shifted = Wavepacket1D::gaussian(&grid, 0.5, 0.4, 2.0).unwrap();
        // Same envelope, phase shifted by k0 t.
        let phase = C64::from_polar(1.0, -2.0 * 1.5);
        let err = out.values().iter().zip(shifted.values()).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let grid = line(-1.0, 1.0, 21);
        let f = |x: f64| C64::new(x * x * x - x, 2.0 * x * x);
        let packet = Wavepacket1D::unnormalized(grid.clone(), grid.xs().map(f).collect()).unwrap();
        for x in [-0.73, 0.01, 0.55] {
            assert!((packet.interpolate(x) - f(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn exposure_matches_erf_free_limit() {
        // A point that passes the whole detector collects kappa.
        let p = DetectorProfile::fixed(0.8, 400.0, 0.3).unwrap();
        assert!((p.exposure(-1.0, 0.0, 3.0) - 0.8).abs() < 1e-8);
        // Halfway: the point sits at the centre at s = 1.3.
        assert!((p.exposure(-1.0, 0.0, 1.3) - 0.4).abs() < 1e-8);
        assert_eq!(p.exposure(5.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn survival_table_eulerian_vs_lagrangian() {
        let grid = line(-6.0, 6.0, 2401);
        let psi0 = Wavepacket1D::gaussian(&grid, -2.0, 0.5, 0.0).unwrap();
        let p = DetectorProfile::fixed(1.0, 400.0, 0.0).unwrap();
        let table = TransportSurvival::new(&psi0, &p, 4.0, 40).unwrap();
        for t in [1.0, 2.0, 3.0] {
            let euler = exact_transport_survival(&psi0, &p, t).unwrap().norm_sqr();
            assert!((euler - table.at(t)).abs() < 1e-4, "t = {t}: {euler} vs {}", table.at(t));
        }
    }

    #[test]
    fn slow_rate_matches_master_fit() {
        for kappa in [5.0, 20.0] {
            let fitted = master_decay_rate(1.0, kappa, 60.0, 1e-3).unwrap();
            let exact = zeno_slow_rate(1.0, kappa);
            assert!((fitted - exact).abs() < 1e-4 * exact.max(1.0), "{fitted} vs {exact}");
        }
    }

    #[test]
    fn zero_kappa_never_fires() {
        let pts = zeno_scan(1.0, &[0.0], 20.0, 0.01, 64, 3, Execution::Sequential).unwrap();
        assert_eq!(pts[0].events, 0);
        assert_eq!(pts[0].rate, 0.0);
    }
}
