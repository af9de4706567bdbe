use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::args::Command;

/// Embedded in every JSON output. Everything except `timings_ms` is a pure
/// function of the invocation.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub inputs: Vec<PathBuf>,
    pub invocation: Command,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(invocation: &Command, inputs: Vec<PathBuf>) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            invocation: invocation.clone(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_ms.insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}
