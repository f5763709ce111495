//! Everything the command-line tool needs beyond the numerical modules:
//! configuration, image and table files, error metrics and the end-to-end
//! pipeline.

pub mod config;
pub mod io;
pub mod metrics;
pub mod pipeline;

pub use config::{PipelineConfig, QuadratureSource};
pub use io::{read_image, write_image, BitDepth};
pub use metrics::{error_stats, max_abs_error, rms_error, ErrorStats, Mask};
pub use pipeline::{compute, run_pipeline, PipelineOutput, RunReport};
