use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Outputs, RunError};
use crate::boxcount::{box_counting_dimension, default_scales};
use crate::csv;
use crate::detector::{
    born_limit_scan, master_decay_rate, point_detector_cdf, rabi_detector_model, rabi_initial_state, zeno_scan,
    zeno_slow_rate, DetectorProfile, TransportSurvival, Wavepacket1D,
};
use crate::dirac::{indefinite_norm, plane_wave, DiracModel, RelativisticSampler, SpacetimeGrid};
use crate::hybrid::{Grid1D, HybridDensityState};
use crate::ifs::{iterate, spinor_from_bloch};
use crate::linalg::C64;
use crate::master::{evolve_density, TimeGrid};
use crate::par::Execution;
use crate::pdp::{ensemble_average, sample_streams, EnsembleConfig};
use crate::render::{render_projection, MIN_RESOLUTION};
use crate::rng::uniform;
use crate::stats::{empirical_cdf, ks_distance};

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), RunError> {
    if ok {
        Ok(())
    } else {
        Err(RunError::Validation(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<(), RunError> {
    check(v > 0.0 && v.is_finite(), || format!("{name} must be positive and finite (got {v})"))
}

fn at_least_one(name: &str, v: usize) -> Result<(), RunError> {
    check(v >= 1, || format!("{name} must be at least 1"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MasterVsPdpParams {
    pub omega: f64,
    pub kappa: f64,
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
    pub trajectories: usize,
}

impl Default for MasterVsPdpParams {
    fn default() -> Self {
        MasterVsPdpParams { omega: 1.0, kappa: 1.0, t_final: 5.0, dt: 1e-3, record_every: 50, trajectories: 20_000 }
    }
}

impl MasterVsPdpParams {
    pub fn validate(&self) -> Result<(), RunError> {
        check(self.omega.is_finite(), || "omega must be finite".into())?;
        check(self.kappa >= 0.0 && self.kappa.is_finite(), || "kappa must be >= 0".into())?;
        TimeGrid::new(self.t_final, self.dt, self.record_every)?;
        at_least_one("trajectories", self.trajectories)
    }

    pub(crate) fn run(&self, seed: u64, exec: Execution) -> Result<Outputs, RunError> {
        let model = rabi_detector_model(self.omega, self.kappa)?;
        let init = rabi_initial_state();
        let grid = TimeGrid::new(self.t_final, self.dt, self.record_every)?;
        let rho0 = HybridDensityState::from_pure(&init, &model)?;
        let (times, master): (Vec<f64>, Vec<HybridDensityState>) = evolve_density(&rho0, &model, &grid)?.into_iter().unzip();
        let cfg = EnsembleConfig { grid, trajectories: self.trajectories, master_seed: seed, execution: exec };
        let ens = ensemble_average(&model, &init, &cfg)?;
        let max_dev = master.iter().zip(&ens.states).map(|(m, p)| m.max_abs_diff(p)).fold(0.0, f64::max);

        let mut out = Outputs::default();
        out.file("master.csv", csv::density_snapshots(&times, &master));
        out.file("pdp.csv", csv::density_snapshots(&ens.times, &ens.states));
        out.file("comparison.csv", csv::density_comparison(&times, &master, &ens.states));
        out.file("first_events.csv", csv::first_events(&ens.first_event_times));
        out.summary("max_abs_deviation", max_dev);
        out.summary("total_events", ens.total_events);
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorCdfParams {
    pub kappa: f64,
    pub w: f64,
    pub detector_at: f64,
    pub x0: f64,
    pub sigma: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub t_max: f64,
    pub steps: usize,
    pub trajectories: usize,
    pub cdf_points: usize,
}

impl Default for DetectorCdfParams {
    fn default() -> Self {
        DetectorCdfParams {
            kappa: 1.0,
            w: 1e4,
            detector_at: 0.0,
            x0: -2.0,
            sigma: 0.5,
            x_min: -6.0,
            x_max: 2.0,
            points: 1601,
            t_max: 4.0,
            steps: 2000,
            trajectories: 10_000,
            cdf_points: 201,
        }
    }
}

impl DetectorCdfParams {
    pub fn validate(&self) -> Result<(), RunError> {
        DetectorProfile::fixed(self.kappa, self.w, self.detector_at)?;
        positive("sigma", self.sigma)?;
        positive("t_max", self.t_max)?;
        Grid1D::new(self.x_min, self.x_max, self.points, false)?;
        at_least_one("steps", self.steps)?;
        at_least_one("trajectories", self.trajectories)?;
        check(self.cdf_points >= 2, || "cdf_points must be at least 2".into())
    }

    pub(crate) fn run(&self, seed: u64, exec: Execution) -> Result<Outputs, RunError> {
        let grid = Grid1D::new(self.x_min, self.x_max, self.points, false)?;
        let psi0 = Wavepacket1D::gaussian(&grid, self.x0, self.sigma, 0.0)?;
        let profile = DetectorProfile::fixed(self.kappa, self.w, self.detector_at)?;
        let table = TransportSurvival::new(&psi0, &profile, self.t_max, self.steps)?;
        let times = table.sample(self.trajectories, seed, exec)?;
        let closed = |t: f64| point_detector_cdf(&psi0, self.kappa, self.detector_at, t);
        let ks = ks_distance(&times, self.t_max, closed);
        let rows = (0..self.cdf_points).map(|k| {
            let t = self.t_max * k as f64 / (self.cdf_points - 1) as f64;
            vec![t, empirical_cdf(&times, t), closed(t), 1.0 - table.at(t)]
        });

        let mut out = Outputs::default();
        out.file("first_events.csv", csv::first_events(&times));
        out.file("cdf.csv", csv::table(&["t", "empirical", "point_detector", "gaussian_detector"], rows));
        out.summary("ks_distance", ks);
        out.summary("plateau", empirical_cdf(&times, self.t_max));
        out.summary("efficiency", 1.0 - (-self.kappa).exp());
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BornLimitParams {
    pub kappa: f64,
    pub detector_at: f64,
    pub x0: f64,
    pub sigma: f64,
    pub w0: f64,
    /// Each level multiplies `w` by 16, shrinking the detector width 4x.
    pub levels: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for BornLimitParams {
    fn default() -> Self {
        BornLimitParams {
            kappa: 1.0,
            detector_at: 0.3,
            x0: 0.0,
            sigma: 1.0,
            w0: 1.0,
            levels: 4,
            x_min: -8.0,
            x_max: 8.0,
            points: 4097,
        }
    }
}

impl BornLimitParams {
    pub fn widths(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.w0 * 16f64.powi(k as i32)).collect()
    }

    pub fn validate(&self) -> Result<(), RunError> {
        positive("kappa", self.kappa)?;
        positive("w0", self.w0)?;
        positive("sigma", self.sigma)?;
        at_least_one("levels", self.levels)?;
        Grid1D::new(self.x_min, self.x_max, self.points, false)?;
        Ok(())
    }

    pub(crate) fn run(&self) -> Result<Outputs, RunError> {
        let grid = Grid1D::new(self.x_min, self.x_max, self.points, false)?;
        let psi0 = Wavepacket1D::gaussian(&grid, self.x0, self.sigma, 0.0)?;
        let scan = born_limit_scan(&psi0, self.kappa, self.detector_at, &self.widths())?;
        let mut out = Outputs::default();
        out.file(
            "born.csv",
            csv::table(&["w", "detector_sigma", "rate", "target", "relative_error"], scan.iter().map(|p| {
                vec![p.w, 0.5 / p.w.sqrt(), p.rate, p.target, p.relative_error]
            })),
        );
        out.summary("final_relative_error", scan.last().map(|p| p.relative_error));
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZenoParams {
    pub omega: f64,
    pub kappas: Vec<f64>,
    pub t_max: f64,
    pub dt: f64,
    pub trajectories: usize,
    /// Horizon and step of the master-equation reference fit.
    pub master_t_max: f64,
    pub master_dt: f64,
}

impl Default for ZenoParams {
    fn default() -> Self {
        ZenoParams {
            omega: 1.0,
            kappas: vec![5.0, 10.0, 20.0, 40.0],
            t_max: 200.0,
            dt: 0.01,
            trajectories: 1000,
            master_t_max: 100.0,
            master_dt: 1e-3,
        }
    }
}

impl ZenoParams {
    pub fn validate(&self) -> Result<(), RunError> {
        positive("omega", self.omega)?;
        check(!self.kappas.is_empty(), || "kappas must not be empty".into())?;
        for &k in &self.kappas {
            positive("kappa", k)?;
        }
        TimeGrid::new(self.t_max, self.dt, 1)?;
        TimeGrid::new(self.master_t_max, self.master_dt, 1)?;
        at_least_one("trajectories", self.trajectories)
    }

    pub(crate) fn run(&self, seed: u64, exec: Execution) -> Result<Outputs, RunError> {
        let scan = zeno_scan(self.omega, &self.kappas, self.t_max, self.dt, self.trajectories, seed, exec)?;
        let mut rows = Vec::new();
        for p in &scan {
            let master = master_decay_rate(self.omega, p.kappa, self.master_t_max, self.master_dt)?;
            rows.push(vec![p.kappa, p.rate, master, zeno_slow_rate(self.omega, p.kappa), p.events as f64]);
        }
        let mut out = Outputs::default();
        out.file("zeno.csv", csv::table(&["kappa", "pdp_rate", "master_rate", "slow_mode_rate", "events"], rows));
        out.summary("strictly_decreasing", scan.windows(2).all(|w| w[1].rate < w[0].rate));
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiracParams {
    pub nx: usize,
    pub nt: usize,
    pub lx: f64,
    pub lt: f64,
    pub mass: f64,
    /// Plane-wave mode number of the carrier.
    pub k: i32,
    pub packet_center: f64,
    pub packet_width: f64,
    pub kappa: f64,
    pub detector_at: f64,
    pub detector_width: f64,
    pub tau_max: f64,
    pub dtau: f64,
    pub samples: usize,
}

impl Default for DiracParams {
    fn default() -> Self {
        DiracParams {
            nx: 32,
            nt: 16,
            lx: 2.0 * PI,
            lt: 2.0 * PI,
            mass: 1.0,
            k: 1,
            packet_center: PI,
            packet_width: 1.0,
            kappa: 1.0,
            detector_at: PI,
            detector_width: 0.5,
            tau_max: 1.0,
            dtau: 0.01,
            samples: 1000,
        }
    }
}

impl DiracParams {
    pub fn validate(&self) -> Result<(), RunError> {
        SpacetimeGrid::new(self.nx, self.nt, self.lx, self.lt)?;
        positive("mass", self.mass)?;
        positive("packet_width", self.packet_width)?;
        positive("detector_width", self.detector_width)?;
        check(self.kappa >= 0.0 && self.kappa.is_finite(), || "kappa must be >= 0".into())?;
        positive("tau_max", self.tau_max)?;
        positive("dtau", self.dtau)?;
        at_least_one("samples", self.samples)
    }

    pub(crate) fn run(&self, seed: u64, exec: Execution) -> Result<Outputs, RunError> {
        let grid = SpacetimeGrid::new(self.nx, self.nt, self.lx, self.lt)?;
        let carrier = plane_wave(&grid, self.mass, self.k);
        let (c, s) = (self.packet_center, self.packet_width);
        let shaped = crate::dirac::SpacetimeSpinor::from_fn(&grid, |x, _| {
            let d = x - c;
            let e = (-d * d / (2.0 * s * s)).exp();
            [C64::new(e, 0.0), C64::new(e, 0.0)]
        });
        let values: Vec<C64> = carrier.values().iter().zip(shaped.values()).map(|(a, b)| a * b).collect();
        let psi = crate::dirac::SpacetimeSpinor::new(grid.clone(), values)?;
        let n = indefinite_norm(&psi);
        if !(n > 0.0) {
            return Err(RunError::Validation(format!("initial packet has non-positive indefinite norm {n}")));
        }
        let psi0 = psi.scaled(C64::new(1.0 / n.sqrt(), 0.0));
        let (xd, wd, kappa) = (self.detector_at, self.detector_width, self.kappa);
        let model = DiracModel::free(self.mass, &grid).with_detector(&grid, |x| {
            let d = x - xd;
            kappa.sqrt() * (-d * d / (4.0 * wd * wd)).exp()
        });
        let sampler = RelativisticSampler::new(&psi0, &model, self.tau_max, self.dtau)?;
        let taus = sample_streams(self.samples, seed, exec, |_, rng| Ok(sampler.sample(uniform(rng))?.tau()))?;

        let mut out = Outputs::default();
        out.file(
            "norm.csv",
            csv::table(&["tau", "indefinite_norm"], sampler.taus().iter().zip(sampler.norms()).map(|(t, n)| vec![*t, *n])),
        );
        out.file("events.csv", csv::first_events(&taus));
        out.summary("event_probability", sampler.event_probability());
        out.summary("sampled_event_fraction", taus.iter().flatten().count() as f64 / taus.len() as f64);
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinIfsParams {
    pub a: f64,
    pub points: usize,
    pub burn_in: usize,
    pub resolution: usize,
    /// Bloch vector of the starting state.
    pub start: [f64; 3],
}

impl Default for SpinIfsParams {
    fn default() -> Self {
        SpinIfsParams { a: 0.73, points: 200_000, burn_in: 1000, resolution: 512, start: [0.0, 0.0, 1.0] }
    }
}

fn validate_ifs(a: f64, points: usize, resolution: usize, start: &[f64; 3]) -> Result<(), RunError> {
    crate::ifs::validate_coupling(a)?;
    at_least_one("points", points)?;
    check(resolution >= MIN_RESOLUTION, || format!("resolution must be at least {MIN_RESOLUTION}"))?;
    let norm = crate::ifs::dot(start, start).sqrt();
    check((norm - 1.0).abs() < 1e-9, || format!("start must be a unit vector (norm {norm})"))
}

impl SpinIfsParams {
    pub fn validate(&self) -> Result<(), RunError> {
        validate_ifs(self.a, self.points, self.resolution, &self.start)
    }

    pub(crate) fn run(&self, seed: u64) -> Result<Outputs, RunError> {
        let cloud = iterate(&spinor_from_bloch(&self.start), self.a, self.points, self.burn_in, seed)?;
        let img = render_projection(&cloud.points, self.resolution)?;
        let mut out = Outputs::default();
        out.file("cloud.csv", csv::cloud(&cloud.points));
        out.file("fig1.pgm", img.to_pgm());
        match box_counting_dimension(&cloud.points, &default_scales()) {
            Ok(est) => {
                let rows = est.rows.iter().map(|r| {
                    vec![r.eps, r.count as f64, r.coverage, f64::from(u8::from(r.used)), r.residual.unwrap_or(f64::NAN)]
                });
                out.file("scales.csv", csv::table(&["eps", "count", "coverage", "used", "residual"], rows));
                out.file("dimension.txt", format!("{}\n", csv::float(est.dimension)));
                out.summary("dimension", est.dimension);
            }
            // Small clouds still get a cloud and an image.
            Err(e @ crate::Error::InvalidParameter(_)) => {
                out.file("dimension.txt", format!("unavailable: {e}\n"));
                out.summary("dimension", Option::<f64>::None);
            }
            Err(e) => return Err(e.into()),
        }
        out.summary("dark_fraction", img.dark_fraction());
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig1Params {
    pub a: f64,
    pub points: usize,
    pub burn_in: usize,
    pub resolution: usize,
    pub start: [f64; 3],
}

impl Default for Fig1Params {
    fn default() -> Self {
        let s = SpinIfsParams::default();
        Fig1Params { a: s.a, points: s.points, burn_in: s.burn_in, resolution: s.resolution, start: s.start }
    }
}

impl Fig1Params {
    pub fn validate(&self) -> Result<(), RunError> {
        validate_ifs(self.a, self.points, self.resolution, &self.start)
    }

    pub(crate) fn run(&self, seed: u64) -> Result<Outputs, RunError> {
        let cloud = iterate(&spinor_from_bloch(&self.start), self.a, self.points, self.burn_in, seed)?;
        let img = render_projection(&cloud.points, self.resolution)?;
        let mut out = Outputs::default();
        out.file("fig1.pgm", img.to_pgm());
        out.summary("dark_fraction", img.dark_fraction());
        Ok(out)
    }
}
