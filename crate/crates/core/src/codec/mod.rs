//! Codebooks, slotted embedding, channel simulation and the sequential
//! threshold decoder.

mod channel;
mod codebook;
mod decoder;
mod format;
mod sim;

pub use channel::{embed_in_slot, pass_awgn, pass_dmc, SlottedFrame, Symbols};
pub use codebook::{generate_codebook, generate_constant_weight, Codebook, CodebookKind, Codeword};
pub use decoder::{
    decode_slotted, decoder_threshold, message_size, Ambiguity, ChannelModel, Decision, DecoderConfig,
    MessageSize, RateModel,
};
pub use format::{read_codebook, write_codebook};
pub use sim::{
    estimate_error_prob, estimate_error_prob_with, trial_message_and_slot, trial_noise_seed, ErrorEstimate, LinkScenario,
    SimMethod,
};

pub(crate) use channel::{awgn_slot, OutputSampler};
