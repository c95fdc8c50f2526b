//! Deterministic parallel ensembles: trajectory `i` always uses RNG stream
//! `i`, chunks are reduced in index order.

use std::ops::Range;

use ndarray::Array2;
use rayon::prelude::*;

use super::accumulate::{AccumulatorSpec, StartConditionedAccumulator};
use super::run::{Observer, StepSample, TrajectoryEngine, TrajectoryRecord};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

use crate::linalg::ZERO;
use crate::liouville::DensityMatrix;

pub const DEFAULT_CHUNK: usize = 64;

/// Runs `body` on consecutive index ranges of at most `chunk` and returns
/// the per-chunk results in order.
pub fn map_chunks<A, F>(n: usize, chunk: usize, body: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(Range<usize>) -> Result<A> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidParameter { field: "n_traj", value: 0.0, reason: "ensemble needs at least one trajectory" });
    }
    let chunk = chunk.max(1);
    let ranges: Vec<Range<usize>> = (0..n).step_by(chunk).map(|s| s..(s + chunk).min(n)).collect();
    ranges.into_par_iter().map(&body).collect()
}

struct Snapshots {
    steps: Vec<u64>,
    sums: Vec<Array2<C64>>,
}

impl Observer for Snapshots {
    fn step(&mut self, s: &StepSample<'_>) {
        for (k, &target) in self.steps.iter().enumerate() {
            if s.step == target {
                let psi = s.state.as_slice();
                let m = &mut self.sums[k];
                for i in 0..psi.len() {
                    for j in 0..psi.len() {
                        m[[i, j]] += psi[i] * psi[j].conj();
                    }
                }
            }
        }
    }
}

/// Ensemble-averaged conditioned projectors at `times`, plus the per-chunk
/// partial sums and trajectory counts.
pub struct SnapshotEnsemble {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub n_traj: usize,
    pub partials: Vec<(usize, Vec<Array2<C64>>)>,
}

pub fn ensemble_snapshots(engine: &TrajectoryEngine, seed: u64, n_traj: usize, times: &[f64], chunk: usize) -> Result<SnapshotEnsemble> {
    let dim = engine.params().dim();
    let steps: Vec<u64> = times.iter().map(|t| (t / engine.dt()).round() as u64).collect();
    if let Some(&bad) = steps.iter().find(|&&s| s > engine.n_steps()) {
        return Err(Error::InvalidParameter { field: "times", value: bad as f64 * engine.dt(), reason: "snapshot after the end of the run" });
    }
    let partials = map_chunks(n_traj, chunk, |r| {
        let mut obs = Snapshots { steps: steps.clone(), sums: vec![Array2::from_elem((dim, dim), ZERO); steps.len()] };
        let len = r.len();
        for i in r {
            engine.run_observed(seed, i as u64, &mut obs)?;
        }
        Ok((len, obs.sums))
    })?;
    let mut total = vec![Array2::from_elem((dim, dim), ZERO); steps.len()];
    for (_, p) in &partials {
        for (t, s) in total.iter_mut().zip(p) {
            *t += s;
        }
    }
    let states = total.into_iter().map(|m| DensityMatrix::from_matrix(m / C64::new(n_traj as f64, 0.0))).collect();
    Ok(SnapshotEnsemble { times: steps.iter().map(|&s| s as f64 * engine.dt()).collect(), states, n_traj, partials })
}

/// Start-conditioned accumulation over `n_traj` trajectories; returns the
/// merged accumulator and the per-chunk partials in order.
pub fn ensemble_accumulate(
    engine: &TrajectoryEngine,
    spec: AccumulatorSpec,
    seed: u64,
    n_traj: usize,
    chunk: usize,
) -> Result<(StartConditionedAccumulator, Vec<StartConditionedAccumulator>)> {
    let partials = map_chunks(n_traj, chunk, |r| {
        let mut acc = StartConditionedAccumulator::new(spec)?;
        for i in r {
            engine.run_observed(seed, i as u64, &mut acc)?;
        }
        Ok(acc)
    })?;
    let mut total = StartConditionedAccumulator::new(spec)?;
    for p in &partials {
        total.merge(p)?;
    }
    Ok((total, partials))
}

/// Full records for streams `0..n_traj`.
pub fn ensemble_records(engine: &TrajectoryEngine, seed: u64, n_traj: usize, decimation: usize) -> Result<Vec<TrajectoryRecord>> {
    let chunks = map_chunks(n_traj, 1, |r| r.map(|i| engine.run_record(seed, i as u64, decimation)).collect::<Result<Vec<_>>>())?;
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SystemParams;
    use crate::trajectories::Protocol;

    fn small() -> TrajectoryEngine {
        let p = SystemParams { n_max: 3, g: 20.0, eps: 2.0, delta_omega: 20.0, tau_d_inv: 100.0, ..SystemParams::default() };
        TrajectoryEngine::new(&p, Protocol::Fixed { duration: 1.0 }, 1e-3).unwrap()
    }

    #[test]
    fn chunking_does_not_change_the_result() {
        let e = small();
        let a = ensemble_snapshots(&e, 3, 10, &[0.5, 1.0], 3).unwrap();
        let b = ensemble_snapshots(&e, 3, 10, &[0.5, 1.0], 64).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(x.trace_distance(y).unwrap() < 1e-12);
            x.check().unwrap();
        }
        assert_eq!(a.partials.len(), 4);
    }

    #[test]
    fn empty_ensemble_is_rejected() {
        assert!(ensemble_snapshots(&small(), 0, 0, &[0.5], 8).is_err());
    }
}
