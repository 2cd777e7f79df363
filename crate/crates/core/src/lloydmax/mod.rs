//! One-dimensional Lloyd-Max quantizers.

mod codebook;
mod io;
pub mod standard;
mod train;

pub use codebook::{Codebook, CodebookKind};
pub use io::{
    deserialize_codebook, read_codebook, serialize_codebook, write_codebook, CODEBOOK_MAGIC, CODEBOOK_VERSION,
};
pub use standard::{coord_codebook, polar_angle_codebook, rho_codebook, uniform_codebook, xi_codebook, CodebookPair};
pub use train::{
    cell_conditional_means, density_distortion, sample_distortion, train_from_density,
    train_from_density_with_report, train_from_samples, train_from_sorted, SortedSamples, TrainOptions, TrainReport,
};
