//! Dense tensors, a reverse-mode tape, LSTM encoders and RMSProp.

mod checkpoint;
mod dropout;
mod embed;
mod encoder;
mod gradcheck;
mod lstm;
mod params;
mod rng;
mod seq2seq;
mod tape;
mod tensor;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use dropout::{dropout, dropout_mask};
pub use embed::{
    embed, read_embeddings, EmbeddingParams, Pretrained, Vocab, BOS, BOS_ID, EOS, EOS_ID, SPECIAL_COUNT, UNK, UNK_ID,
};
pub use encoder::Encoder;
pub use gradcheck::gradient_check;
pub use lstm::{bilstm, bilstm_encode, lstm_step, LstmParams};
pub use params::{clip_grad_norm, init_uniform, init_uniform_prefix, rmsprop_update, Grads, Param, ParamId, ParamStore, RmsProp};
pub use rng::{stream_rng, Stream};
pub use seq2seq::TinySeq2Seq;
pub use tape::{Tape, Var, PROB_CLAMP};
pub(crate) use tape::softmax_values;
pub use tensor::Tensor;
