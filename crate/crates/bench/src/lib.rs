//! Fixtures shared by the benchmarks.

use tadropedge::synth::{generate_sbm, SbmConfig};
use tadropedge::Graph;

/// Planted-partition graph with `c` equal communities.
pub fn sbm(n: usize, c: usize, p_intra: f64, p_inter: f64, seed: u64) -> (Graph, Vec<usize>) {
    generate_sbm(&SbmConfig {
        n,
        c,
        p_intra,
        p_inter,
        seed,
    })
    .expect("valid SBM configuration")
}
