//! Iteration-indexed optimization records, the unit of persistence for
//! experiment runs.

/// One cost evaluation of an optimizer run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub proposal_hsd: f64,
    pub best_hsd: f64,
    /// Cumulative cost evaluations after this record.
    pub evaluations: u64,
    pub elapsed_seconds: f64,
}

/// Full run record: per-iteration samples plus run metadata.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
    pub seed: u64,
    /// Experiment tag set by harnesses, e.g. "ghz-convergence".
    pub experiment: Option<String>,
    /// Human-readable summary of the configuration that produced the run.
    pub config_summary: String,
}

impl OptimizationTrace {
    pub fn new(seed: u64, config_summary: String) -> Self {
        Self {
            records: Vec::new(),
            seed,
            experiment: None,
            config_summary,
        }
    }

    /// Append one record; iteration indices must strictly increase.
    pub fn push(&mut self, record: IterationRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                record.iteration > last.iteration,
                "iteration indices must strictly increase"
            );
        }
        self.records.push(record);
    }

    pub fn best_final(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_hsd)
    }

    /// Records where the best-so-far value improved, in order.
    pub fn improvements(&self) -> Vec<&IterationRecord> {
        let mut out = Vec::new();
        let mut best = f64::INFINITY;
        for r in &self.records {
            if r.best_hsd < best {
                best = r.best_hsd;
                out.push(r);
            }
        }
        out
    }
}

/// Monotone clock that degrades gracefully on targets without one.
#[derive(Debug, Clone, Copy)]
pub struct RunClock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl RunClock {
    pub fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn elapsed_seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
