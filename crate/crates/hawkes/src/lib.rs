//! Standard-library companion to `hawkes-core`: a rayon executor, a wall
//! clock, CSV/JSON file formats, a binary event cache and the benchmark
//! harness behind the `hawkes` command-line tool.

pub mod bench;
pub mod cache;
pub mod files;
pub mod pool;

pub use files::{read_events, read_params, write_events, write_fit_report, write_params, FileError};
pub use pool::{Pool, WallClock};
