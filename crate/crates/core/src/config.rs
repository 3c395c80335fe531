//! Tolerances and search knobs shared by every oracle.

use serde::{Deserialize, Serialize};

/// Numerical tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum entrywise asymmetry accepted as Hermitian.
    pub hermitian: f64,
    /// Eigensolver residual tolerance (relative to the Frobenius norm).
    pub eig: f64,
    /// Decision margin for cone membership.
    pub decision: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            eig: 1e-10,
            decision: 1e-9,
        }
    }
}

/// Options for the heuristic optimizers and sampled checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOpts {
    pub tol: Tolerances,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop an alternating run once the value improves by less than this.
    pub improve_eps: f64,
    pub seed: u64,
    /// Number of random generators used when searching for decomposition certificates.
    pub certificate_samples: usize,
}

impl Default for SearchOpts {
    fn default() -> Self {
        SearchOpts {
            tol: Tolerances::default(),
            restarts: 16,
            max_iter: 200,
            improve_eps: 1e-12,
            seed: 0,
            certificate_samples: 48,
        }
    }
}

impl SearchOpts {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.tol.decision = margin;
        self
    }

    pub fn margin(&self) -> f64 {
        self.tol.decision
    }
}
