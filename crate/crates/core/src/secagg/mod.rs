//! Pairwise-masked secure aggregation over a relabelled Harary graph.
//!
//! Each pair of neighbours agrees on a 128-bit seed, expands it into a mask
//! over `Z_{2^64}`, and the lower-id client adds the mask while the higher-id
//! client subtracts it. The server sees only masked uploads; their sum is the
//! sum of the fixed-point encoded inputs, bit for bit.

mod codec;
mod graph;
mod ka;
mod prg;
mod round;
mod transcript;
mod transport;

pub use codec::{FieldVector, FixedPointCodec, DEFAULT_SCALE_BITS};
pub use graph::{degree_for, harary, init_secure_agg, CommGraph};
pub use ka::{key_agreement, key_agreements, KeyAgreement, KeyPair, PublicKey, SecretKey, SharedSeed, TestKeyAgreement, X25519KeyAgreement};
pub use prg::expand_mask;
pub use round::{aggregator, aggregators, secure_agg_round, senders_in_round, KEY_EXCHANGE_ROUND, AggregationSetup, Aggregator, ClientOps, PlainAggregator, SecureAggregator};
pub use transcript::{Message, MessageKind, Party, Transcript};
pub use transport::{Envelope, MessageBus};
