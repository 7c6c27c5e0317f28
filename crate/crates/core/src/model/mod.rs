//! The classifier: tanh-bounded embeddings with channel dropout, two
//! hard-sigmoid BiLSTM layers, attention pooling over the skip-connected
//! `[embedding; lstm0; lstm1]` features, dropout, and a linear layer.

mod attention;
mod config;
mod embed;
mod lstm;
mod network;
mod params;
mod serialize;

pub use attention::{attention_backward, attention_forward, AttentionCache};
pub use config::ModelConfig;
pub use embed::{embed_backward, embed_forward, EmbedCache};
pub use lstm::{bilstm_backward, bilstm_forward, BiLstmCache, DirectionCache};
pub use network::{
    argmax, backward_example, batch_loss, forward_example, loss_and_grad, model_backward,
    model_backward_groups, model_forward, model_forward_with, predict, Classifier, ExampleCache,
    ForwardCache, Prediction,
};
pub use params::{BiLstmParams, GroupSet, LayerGroup, LstmDirection, ModelParams};
pub use serialize::{decode_model, encode_model, fnv1a64, load_model, save_model, FORMAT_VERSION, MAGIC};
