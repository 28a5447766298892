//! sEMG conditioning: band-pass, rectification, smoothing, envelope and
//! MVC normalization.

pub mod butterworth;
pub mod envelope;
pub mod moving_average;
pub mod pipeline;

pub use butterworth::{BandpassFilter, Biquad, FilterSpec};
pub use envelope::{envelope_detect, normalize_mvc, rectify, EnvelopeDetector};
pub use moving_average::{moving_average, window_len, MovingAverage};
pub use pipeline::{
    bandpass_filter, condition, ConditionedSample, Conditioner, PipelineConfig, SemgFrame, StageOutput,
};
