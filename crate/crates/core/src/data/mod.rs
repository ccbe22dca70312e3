//! Datasets: the series carrier, synthetic generators, CSV ingestion and splits.

pub mod hmm;
pub mod io;
pub mod series;
pub mod spiral;
pub mod split;

pub use hmm::{gen_hmm, HmmConfig};
pub use io::{load_csv, write_csv};
pub use series::{SeriesMatrix, SeriesMeta};
pub use spiral::{gen_spiral, SpiralConfig, SpiralData};
pub use split::{split_series, SeriesSplit};
