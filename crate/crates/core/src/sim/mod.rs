//! Plants, feature maps, experiments and the closed-loop harness.

pub mod envelope;
pub mod episode;
pub mod experiment;
pub mod features;
pub mod plant;
pub mod sweep;
pub mod trace;
pub mod wind;

pub use episode::{run_episode, EpisodeResult, TraceRecord};
pub use experiment::Experiment;
pub use features::FeatureMap;
pub use plant::{NoiseModel, Plant};
pub use wind::WindField;
