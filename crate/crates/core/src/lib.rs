//! Limiting spectral distributions of symmetric random matrices whose
//! diagonals are independent processes with a common internal correlation `c`.
//!
//! The limit law interpolates between the semicircle law (`c = 0`) and the
//! Toeplitz limit (`c = 1`). Its even moments are sums over pair partitions of
//! Toeplitz volumes weighted by `c^(k/2 - height)`; this crate computes them
//! ([`limit_moments`], [`toeplitz_volume`], [`partitions`]), simulates matrix
//! ensembles that realize a given `c` ([`field_sampler`], [`curie_weiss`],
//! [`spectra`]) and checks the underlying counting statements by exhaustive
//! enumeration ([`oracle`]).

pub mod curie_weiss;
pub mod eigen;
pub mod error;
pub mod field_sampler;
pub mod limit_moments;
pub mod oracle;
pub mod partitions;
pub mod seed;
pub mod spectra;
pub mod toeplitz_volume;
pub mod verify;

pub use error::{Error, Result};
pub use field_sampler::{GeneratorKind, GeneratorSpec, SymmetricMatrix};
pub use limit_moments::{nu_c_moment, MomentForm, MomentValue};
pub use partitions::PairPartition;
pub use toeplitz_volume::{toeplitz_volume, VolumeCache, VolumeEstimate};
