//! Individual-level dynamics: the piecewise deterministic jump process.
//!
//! A trajectory alternates between deterministic non-Hermitian drift and
//! jumps of the classical label. With `psi` normalized at the start of a
//! segment, `|psi_t|^2` is the probability that no event has happened yet,
//! so the next event time is where `|psi_t|^2` falls to `1 - p` for a fresh
//! uniform `p`. The target channel is then drawn with probabilities
//! `|g_{b a} psi|^2 / (psi, Lambda_a psi)`.

mod drift;
mod ensemble;

pub(crate) use drift::{normalize, DriftEngine};
pub use ensemble::{ensemble_average, first_event_times, sample_streams, EnsembleConfig, EnsembleResult};

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::hybrid::{HybridModel, HybridPureState, Label};
use crate::linalg::{norm_sqr, CVector, C64, ZERO};
use crate::master::TimeGrid;
use crate::rng::{uniform, Stream};

/// One classical event.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub from: Label,
    pub to: Label,
    pub post_state: CVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub events: Vec<Event>,
    /// Normalized state at every snapshot time of the grid.
    pub snapshots: Vec<(f64, HybridPureState)>,
}

impl TrajectoryRecord {
    pub fn first_event_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.t)
    }
}

/// Result of a search for the next event time.
#[derive(Clone, Debug, PartialEq)]
pub enum JumpSearch {
    /// Event at `t`; `psi` is the unnormalized drifted state there.
    Jump { t: f64, psi: CVector },
    NoJumpBefore { t_max: f64, psi: CVector },
}

fn check_state(model: &HybridModel, label: Label, psi: &CVector) -> Result<()> {
    model.check_label(label)?;
    if psi.len() != model.dim(label) {
        return Err(Error::shape(format!("state of label {label}"), model.dim(label), psi.len()));
    }
    Ok(())
}

/// One RK4 step of the drift. The result is not renormalized.
pub fn drift_step(psi: &CVector, label: Label, model: &HybridModel, t: f64, dt: f64) -> Result<CVector> {
    check_state(model, label, psi)?;
    let mut out = CVector::zeros(psi.len());
    DriftEngine::new(model, dt).rk4(label, t, dt, psi.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Steps from `t0` in increments of `dt` (the last one truncated at `t_max`)
/// until `|psi|^2` drops to `1 - p`, then bisects within the bracketing step.
pub fn find_jump_time(
    psi0: &CVector,
    label: Label,
    model: &HybridModel,
    p: f64,
    t0: f64,
    dt: f64,
    t_max: f64,
) -> Result<JumpSearch> {
    check_state(model, label, psi0)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("uniform draw p = {p} outside [0, 1)")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    let mut engine = DriftEngine::new(model, dt);
    let target = 1.0 - p;
    let mut psi = psi0.clone();
    let mut next = psi0.clone();
    let mut t = t0;
    if norm_sqr(psi.as_slice()) <= target {
        return Ok(JumpSearch::Jump { t, psi });
    }
    let mut k = 0usize;
    while t < t_max {
        k += 1;
        let t_next = (t0 + k as f64 * dt).min(t_max);
        let h = t_next - t;
        engine.step(label, t, h, psi.as_slice(), next.as_mut_slice());
        if norm_sqr(next.as_slice()) <= target {
            let s = engine.locate(label, t, h, target, psi.as_slice(), next.as_mut_slice());
            return Ok(JumpSearch::Jump { t: t + s, psi: next });
        }
        std::mem::swap(&mut psi, &mut next);
        t = t_next;
    }
    Ok(JumpSearch::NoJumpBefore { t_max, psi })
}

/// Drift without jumps from `t0` to `t1` in steps of at most `dt`.
pub fn drift_for(psi: &CVector, label: Label, model: &HybridModel, t0: f64, t1: f64, dt: f64) -> Result<CVector> {
    check_state(model, label, psi)?;
    if !(dt > 0.0) || !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("drift from {t0} to {t1} with dt = {dt}")));
    }
    let mut engine = DriftEngine::new(model, dt);
    let mut cur = psi.clone();
    let mut next = psi.clone();
    let steps = ((t1 - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let mut t = t0;
    for k in 1..=steps {
        let t_next = if k == steps { t1 } else { t0 + k as f64 * dt };
        engine.step(label, t, t_next - t, cur.as_slice(), next.as_mut_slice());
        std::mem::swap(&mut cur, &mut next);
        t = t_next;
    }
    Ok(cur)
}

/// Below this the jump intensity is treated as zero.
pub const MIN_INTENSITY: f64 = 1e-300;

/// Channel weights `|g_{b a} psi|^2` in ascending order of `b`, together
/// with the images `g_{b a} psi`.
pub fn channel_weights(psi: &[C64], label: Label, model: &HybridModel, t: f64) -> Vec<(Label, f64, CVector)> {
    model
        .coupling()
        .outgoing(label)
        .map(|e| {
            let mut image = CVector::from_element(e.op.rows(), ZERO);
            e.op.at(t).apply(psi, image.as_mut_slice());
            let w = norm_sqr(image.as_slice());
            (e.to, w, image)
        })
        .collect()
}

/// Jump probabilities `p_{a -> b}`, ascending in `b`.
pub fn jump_probabilities(psi: &CVector, label: Label, model: &HybridModel, t: f64) -> Result<Vec<(Label, f64)>> {
    check_state(model, label, psi)?;
    let w = channel_weights(psi.as_slice(), label, model, t);
    let total: f64 = w.iter().map(|c| c.1).sum();
    if !(total > MIN_INTENSITY) {
        return Err(Error::ZeroJumpIntensity { label, t });
    }
    Ok(w.into_iter().map(|(b, wb, _)| (b, wb / total)).collect())
}

fn jump_slice(psi: &[C64], label: Label, model: &HybridModel, t: f64, u: f64) -> Result<(Label, CVector)> {
    let channels = channel_weights(psi, label, model, t);
    let total: f64 = channels.iter().map(|c| c.1).sum();
    if !(total > MIN_INTENSITY) {
        return Err(Error::ZeroJumpIntensity { label, t });
    }
    let threshold = u * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (k, c) in channels.iter().enumerate() {
        if c.1 > 0.0 {
            chosen = Some(k);
        }
        acc += c.1;
        if threshold < acc && c.1 > 0.0 {
            break;
        }
    }
    let (to, w, mut image) = channels.into_iter().nth(chosen.expect("positive total weight")).expect("channel");
    image.scale_mut(1.0 / w.sqrt());
    Ok((to, image))
}

/// Selects the target label with the uniform `u` and returns the
/// normalized post-jump state.
pub fn jump(psi: &CVector, label: Label, model: &HybridModel, t: f64, u: f64) -> Result<(Label, CVector)> {
    check_state(model, label, psi)?;
    jump_slice(psi.as_slice(), label, model, t, u)
}

/// What a trajectory should keep besides the event list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Recording {
    #[default]
    EventsOnly,
    Snapshots,
}

/// Runs one trajectory on `grid` with the random stream seeded by `seed`.
pub fn run_trajectory(
    init: &HybridPureState,
    model: &HybridModel,
    grid: &TimeGrid,
    recording: Recording,
    seed: u64,
) -> Result<TrajectoryRecord> {
    grid.validate()?;
    check_state(model, init.label, &init.psi)?;
    let n = init.psi.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("initial state norm {n} != 1")));
    }
    let mut engine = DriftEngine::new(model, grid.dt);
    let mut rng = Stream::seed_from_u64(seed);
    let mut record = trajectory_with(&mut engine, init, grid, recording, &mut rng)?;
    record.seed = seed;
    Ok(record)
}

pub(crate) fn trajectory_with<R: Rng>(
    engine: &mut DriftEngine<'_>,
    init: &HybridPureState,
    grid: &TimeGrid,
    recording: Recording,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    let model = engine.model();
    let steps = grid.steps();
    let snap = recording == Recording::Snapshots;
    let mut events = Vec::new();
    let mut snapshots = Vec::new();

    let mut label = init.label;
    let mut psi: Vec<C64> = init.psi.as_slice().to_vec();
    let mut next = vec![ZERO; model.max_dim()];
    let mut t = 0.0;
    // Index of the step whose end is the next grid time ahead of `t`.
    let mut k = 1usize;
    if snap {
        snapshots.push((0.0, init.clone()));
    }

    'segments: loop {
        let p = uniform(rng);
        let target = 1.0 - p;
        if k > steps {
            break;
        }
        if model.coupling().is_absorbing(label) && !snap {
            break;
        }
        let d = psi.len();
        next.resize(d, ZERO);

        let mut jump_at = None;
        if norm_sqr(&psi) <= target {
            jump_at = Some(t);
            next.copy_from_slice(&psi);
        }
        while jump_at.is_none() && k <= steps {
            let t_next = grid.time(k);
            let h = t_next - t;
            engine.step(label, t, h, &psi, &mut next);
            if norm_sqr(&next) <= target {
                let s = engine.locate(label, t, h, target, &psi, &mut next);
                jump_at = Some(t + s);
                break;
            }
            std::mem::swap(&mut psi, &mut next);
            t = t_next;
            if snap && grid.is_snapshot(k) {
                let mut v = CVector::from_column_slice(&psi);
                normalize(v.as_mut_slice());
                snapshots.push((t, HybridPureState { label, psi: v }));
            }
            k += 1;
        }
        let Some(t1) = jump_at else {
            break 'segments;
        };

        let u = uniform(rng);
        let (to, post) = jump_slice(&next, label, model, t1, u)?;
        events.push(Event { t: t1, from: label, to, post_state: post.clone() });
        label = to;
        psi = post.as_slice().to_vec();
        t = t1;
    }
    Ok(TrajectoryRecord { seed: 0, events, snapshots })
}
