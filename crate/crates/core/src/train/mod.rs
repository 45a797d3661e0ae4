//! Training of the unrolled network: exact gradients of the per-depth loss,
//! the Adam optimizer and the layer-by-layer schedule.

mod adam;
mod incremental;
mod tape;
pub mod tgd;

pub use adam::Adam;
pub use incremental::{batch_loss, incremental_train, incremental_train_with, GenerationLog, TrainConfig, TrainOutcome};
pub use tape::{loss_and_gradient, Batch, GradientTape};
