//! Polynomial graph filters, a layered GCNN with hand-derived
//! backpropagation, and a trainer that resamples the shift every epoch.

mod filter;
mod model;
mod train;

pub use filter::{
    filter_apply, frequency_response, integral_lipschitz_constant, lambda_grid, shift_stacked,
    shifted_powers, Activation, FilterSpec, DEFAULT_GRID_POINTS,
};
pub use model::{
    argmax_rows, evaluate, forward, forward_cached, logits, loss, loss_and_gradient,
    softmax_cross_entropy, Architecture, Examples, ForwardCache, GnnModel, Readout, ReadoutKind,
};
pub use train::{train, EpochRecord, Optimizer, TrainConfig, TrainOutcome};

#[cfg(test)]
mod tests;
