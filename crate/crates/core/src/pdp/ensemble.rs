use crate::error::Result;
use crate::hybrid::{HybridDensityState, HybridModel, HybridPureState, Label};
use crate::linalg::{CMatrix, C64};
use crate::master::TimeGrid;
use crate::par::{map_chunks, Execution};
use crate::rng::{stream, Stream};

use super::{trajectory_with, DriftEngine, Recording};

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub grid: TimeGrid,
    pub trajectories: usize,
    pub master_seed: u64,
    pub execution: Execution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    /// Average of `|psi><psi|` per label at each snapshot time.
    pub states: Vec<HybridDensityState>,
    /// First event time of each trajectory, by trajectory index.
    pub first_event_times: Vec<Option<f64>>,
    pub total_events: usize,
}

impl EnsembleResult {
    /// Fraction of trajectories with at least one event at or before `t`.
    pub fn fraction_with_event(&self, t: f64) -> f64 {
        let hits = self.first_event_times.iter().filter(|e| e.is_some_and(|s| s <= t)).count();
        hits as f64 / self.first_event_times.len().max(1) as f64
    }

    /// Counts of first event times in the bins `[edges[i], edges[i+1])`.
    pub fn event_histogram(&self, edges: &[f64]) -> Vec<usize> {
        let mut counts = vec![0; edges.len().saturating_sub(1)];
        for t in self.first_event_times.iter().flatten() {
            let i = edges.partition_point(|e| e <= t);
            if i >= 1 && i < edges.len() {
                counts[i - 1] += 1;
            }
        }
        counts
    }
}

/// Runs `f(index, stream)` for `n` independent streams and returns the
/// results in index order. The first error by index wins.
pub fn sample_streams<T, F>(n: usize, master_seed: u64, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> Result<T> + Sync + Send,
{
    let parts = map_chunks(n, exec, |range| {
        range.map(|i| f(i, &mut stream(master_seed, i as u64))).collect::<Result<Vec<T>>>()
    });
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

struct Partial {
    sums: Vec<Vec<CMatrix>>,
    first: Vec<Option<f64>>,
    events: usize,
}

/// Averages `cfg.trajectories` trajectories started from `init`.
///
/// Trajectory `i` uses the stream derived from `(master_seed, i)`. Chunks
/// of trajectories are summed in index order and the chunk sums folded in
/// order, so the result does not depend on the number of workers.
pub fn ensemble_average(model: &HybridModel, init: &HybridPureState, cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    cfg.grid.validate()?;
    model.check_label(init.label)?;
    let n = cfg.trajectories.max(1);
    let times = cfg.grid.snapshot_times();
    let zero_blocks = || -> Vec<CMatrix> {
        (0..model.labels())
            .map(|a| {
                let d = model.dim(Label(a));
                CMatrix::zeros(d, d)
            })
            .collect()
    };

    let parts = map_chunks(n, cfg.execution, |range| -> Result<Partial> {
        let mut engine = DriftEngine::new(model, cfg.grid.dt);
        let mut partial = Partial { sums: vec![zero_blocks(); times.len()], first: Vec::with_capacity(range.len()), events: 0 };
        for i in range {
            let mut rng = stream(cfg.master_seed, i as u64);
            let rec = trajectory_with(&mut engine, init, &cfg.grid, Recording::Snapshots, &mut rng)?;
            for (sum, (_, s)) in partial.sums.iter_mut().zip(&rec.snapshots) {
                let block = &mut sum[s.label.0];
                let psi = &s.psi;
                for c in 0..psi.len() {
                    let pc = psi[c].conj();
                    for r in 0..psi.len() {
                        block[(r, c)] += psi[r] * pc;
                    }
                }
            }
            partial.first.push(rec.first_event_time());
            partial.events += rec.events.len();
        }
        Ok(partial)
    });

    let mut sums = vec![zero_blocks(); times.len()];
    let mut first = Vec::with_capacity(n);
    let mut total_events = 0;
    for part in parts {
        let part = part?;
        for (acc, s) in sums.iter_mut().zip(part.sums) {
            for (a, b) in acc.iter_mut().zip(s) {
                *a += b;
            }
        }
        first.extend(part.first);
        total_events += part.events;
    }
    let scale = C64::new(1.0 / n as f64, 0.0);
    let states = sums
        .into_iter()
        .map(|blocks| HybridDensityState::from_blocks_unchecked(blocks.into_iter().map(|b| b * scale).collect()))
        .collect();
    Ok(EnsembleResult { times, states, first_event_times: first, total_events })
}

/// First event time of each of `n` trajectories (by index), without
/// recording states.
pub fn first_event_times(
    model: &HybridModel,
    init: &HybridPureState,
    grid: &TimeGrid,
    n: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<Option<f64>>> {
    grid.validate()?;
    model.check_label(init.label)?;
    let parts = map_chunks(n, exec, |range| -> Result<Vec<Option<f64>>> {
        let mut engine = DriftEngine::new(model, grid.dt);
        range
            .map(|i| {
                let mut rng = stream(master_seed, i as u64);
                let rec = trajectory_with(&mut engine, init, grid, Recording::EventsOnly, &mut rng)?;
                Ok(rec.first_event_time())
            })
            .collect()
    });
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}
