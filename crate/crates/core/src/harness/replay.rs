//! Replay session: one stream window plus one factor model, with every
//! window change routed through the configured update rule and timed.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cpd::{fitness, FactorModel};
use crate::stream::{DeltaChange, SparseWindow, StreamWindow, TimestampedTuple};
use crate::updates::{dispatch_event, UpdateError, UpdateParams, UpdateStats};

use super::HarnessError;

pub struct Replay {
    pub stream: StreamWindow<f64>,
    pub model: FactorModel<f64>,
    pub params: UpdateParams<f64>,
    pub stats: UpdateStats,
    /// Nanoseconds spent inside `dispatch_event`, one entry per event.
    pub latencies_ns: Vec<u64>,
    rng: ChaCha8Rng,
}

impl Replay {
    pub fn new(
        stream: StreamWindow<f64>,
        model: FactorModel<f64>,
        params: UpdateParams<f64>,
        rng_seed: u64,
    ) -> Self {
        Self {
            stream,
            model,
            params,
            stats: UpdateStats::default(),
            latencies_ns: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        }
    }

    /// Ingests one tuple, dispatching the drained scheduled updates and the
    /// arrival itself through the update rule.
    pub fn ingest(&mut self, tuple: &TimestampedTuple<f64>) -> Result<(), HarnessError> {
        self.ingest_scored(tuple, |_, _, _| {})
    }

    /// Like [`Replay::ingest`], but invokes `score` for every event before
    /// its factor update runs (window already changed, factors not yet).
    /// Scoring time stays outside the latency measurements.
    pub fn ingest_scored(
        &mut self,
        tuple: &TimestampedTuple<f64>,
        mut score: impl FnMut(&DeltaChange<f64>, &SparseWindow<f64>, &FactorModel<f64>),
    ) -> Result<(), HarnessError> {
        let Self {
            stream,
            model,
            params,
            stats,
            latencies_ns,
            rng,
        } = self;
        let mut failure: Option<UpdateError> = None;
        let arrival = stream.ingest(tuple, |delta, window| {
            if failure.is_some() {
                return;
            }
            score(delta, window, model);
            let t0 = Instant::now();
            if let Err(e) = dispatch_event(delta, window, model, params, rng, stats) {
                failure = Some(e);
                return;
            }
            latencies_ns.push(t0.elapsed().as_nanos() as u64);
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        score(&arrival, stream.window(), model);
        let t0 = Instant::now();
        dispatch_event(&arrival, stream.window(), model, params, rng, stats)?;
        latencies_ns.push(t0.elapsed().as_nanos() as u64);
        Ok(())
    }

    /// Advances the clock, dispatching any scheduled updates that come due.
    pub fn advance(&mut self, to: i64) -> Result<usize, HarnessError> {
        let Self {
            stream,
            model,
            params,
            stats,
            latencies_ns,
            rng,
        } = self;
        let mut failure: Option<UpdateError> = None;
        let n = stream.advance_clock(to, |delta, window| {
            if failure.is_some() {
                return;
            }
            let t0 = Instant::now();
            if let Err(e) = dispatch_event(delta, window, model, params, rng, stats) {
                failure = Some(e);
                return;
            }
            latencies_ns.push(t0.elapsed().as_nanos() as u64);
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        Ok(n)
    }

    pub fn fitness(&self) -> Result<f64, HarnessError> {
        Ok(fitness(
            self.stream.window(),
            &self.model.factors,
            self.model.weights_slice(),
        )?
        .value)
    }
}
