//! Pipeline orchestration and report emission on top of `storyline-core`:
//! configuration, the staged end-to-end run, and the SVG timeline renderer.

pub mod config;
pub mod pipeline;
pub mod render;

pub use config::PipelineConfig;
pub use pipeline::{run_pipeline, PipelineOutput};
pub use render::render_storyline;
