//! Work counters shared by the pipelines.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

/// Thread-safe counters bumped by pipeline stages.
#[derive(Debug, Default)]
pub struct Counters {
    projections_run: AtomicUsize,
    hill_climbs_run: AtomicUsize,
    regressors_trained: AtomicUsize,
}

/// Plain snapshot of [`Counters`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub projections_run: usize,
    pub hill_climbs_run: usize,
    pub regressors_trained: usize,
}

impl Counters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_projection(&self) {
        self.projections_run.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_hill_climb(&self) {
        self.hill_climbs_run.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_regressor(&self) {
        self.regressors_trained.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            projections_run: self.projections_run.load(Ordering::Relaxed),
            hill_climbs_run: self.hill_climbs_run.load(Ordering::Relaxed),
            regressors_trained: self.regressors_trained.load(Ordering::Relaxed),
        }
    }
}
