//! The key codec and its wire format.

mod attention;
pub(crate) mod bits;
mod config;
mod octopus;
mod pack;
pub mod qjl;

pub use attention::{attention_decode, softmax, SoftmaxPartial};
pub use config::{default_bit_split, effective_bits_per_coord, CodecConfig, Rounding};
pub use octopus::{joint_round_triplet, triplet_loss, CompressedKey, OctopusCodec, PreparedQuery, TripletCode};
pub use pack::{key_at, pack, pack_keys, unpack, unpack_keys, PackedBlob, StreamHeader, HEADER_LEN, STREAM_MAGIC};
pub use qjl::{QjlSidecar, QjlSketch};
