//! Numerical checks of the perturbation model behind edge dropping.

mod bound;
mod relative;
mod stochastic;
mod subspace;

pub use bound::{theorem1_check, BoundReport};
pub use relative::{
    connectivity_entry_expansion, misalignment, relative_error, RelativeError, SINGULAR_TOL,
};
pub use stochastic::{
    enumerate_objective, monte_carlo_objective, output_variance, MonteCarloEstimate,
    MAX_ENUMERATED_EDGES,
};
pub use subspace::{subspace_perturbation, SubspaceReport};
