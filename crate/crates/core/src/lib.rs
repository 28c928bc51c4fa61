//! Urban acoustic monitoring toolkit.
//!
//! Edge nodes meter A-weighted sound levels and perceptual indicators at a
//! 3-second cadence, stream the derived records (never audio) to an
//! ingestion server, and an analysis layer turns the stored logs into
//! hourly aggregates, daily reports and circular (24-sector polar) plots.
//!
//! The signal-processing core is generic over the sample scalar via
//! [`real::Real`]; the rest of the pipeline uses the `f64`-concrete
//! aliases exported below.

pub mod analysis;
pub mod circplot;
pub mod dsp;
pub mod estimator;
pub mod features;
pub mod node;
pub mod real;
pub mod record;
pub mod scenario;
pub mod registry;
pub mod server;
pub mod storage;
pub mod wav;
pub mod wire;

pub use dsp::DspError;

/// Scalar used by the concrete pipeline.
pub type Sample = f64;

/// Sample block over the pipeline scalar.
pub type SampleBlock = dsp::SampleBlock<Sample>;

/// A-weighting filter over the pipeline scalar.
pub type AWeightingFilter = dsp::AWeightingFilter<Sample>;

/// LAeq meter over the pipeline scalar.
pub type LaeqMeter = dsp::LaeqMeter<Sample>;
