use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resource caps applied by constructors that can blow up.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Caps {
    pub max_points: usize,
    pub max_radius: u64,
    pub max_universe: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_points: 20_000,
            max_radius: 400,
            max_universe: 4_000_000,
        }
    }
}

impl Caps {
    pub fn validate(&self) -> Result<()> {
        if self.max_points == 0 || self.max_radius == 0 || self.max_universe == 0 {
            return Err(Error::Domain("resource caps must be positive".into()));
        }
        Ok(())
    }
}

/// Settings shared by every batch run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunConfig {
    pub caps: Caps,
    /// Worker threads for pair loops; results never depend on it.
    pub parallelism: usize,
    /// Seed for sampled (non-exhaustive) checks; recorded in reports.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            caps: Caps::default(),
            parallelism: 1,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.caps.validate()?;
        if self.parallelism == 0 {
            return Err(Error::Domain("parallelism must be at least 1".into()));
        }
        Ok(())
    }

    /// Runs `f` on a dedicated pool with `parallelism` threads.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?;
        Ok(pool.install(f))
    }
}
