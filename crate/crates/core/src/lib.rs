//! Incremental type-1/type-2 characteristic matrices for covering-based rough sets.

mod bits;

pub mod approx;
pub mod charmat;
pub mod compress;
pub mod dynamic;
pub mod matrix;
pub mod model;
pub mod snapshot;

pub use bits::Ones;
pub use charmat::{build_cache, CharCache, WorkStats};
pub use dynamic::{apply, apply_mut, Delta, DeltaError};
pub use matrix::{BoolMatrix, TritMatrix};
pub use model::{
    parse_family, serialize_family, validate, Block, BlockFamily, CoverReport, ObjectSet, Universe,
};
