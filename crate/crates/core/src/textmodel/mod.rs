//! Token embeddings, input composition and the classifier.

mod adam;
mod classifier;
mod embedding;
mod input;
mod model;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use classifier::{argmax, forward, loss_and_gradients, ClassifierParams, LossOutput, NUM_CLASSES, PROB_FLOOR};
pub use embedding::{EmbeddingTable, UNK_TOKEN};
pub use input::{compose_input, expand_posce, positional_encoding, InputRepresentation};
pub use model::{Model, CHECKPOINT_VERSION};
