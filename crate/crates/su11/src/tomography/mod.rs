//! Regularized group-integral tomography.
//!
//! Pipeline: register a regularizer g(theta), build the frame table F_mn of
//! the regularized group average, then reconstruct ensemble averages
//! Tr[rho A] by Monte Carlo over the weighted measure, evaluating the traces
//! Tr[rho U] either exactly or through the simulated axis measurement.

mod frame;
mod measure;
mod reconstruct;
mod regularizer;

pub use frame::{
    frame_coefficients, frame_for_config, i_kg, FrameCacheFile, FrameCacheHeader,
    FrameCoefficients, FrameSector,
};
pub use measure::{simulate_measurement, Measurer};
pub use reconstruct::{
    double_ket_pairing, processing_function, reconstruct, variance_check, DenseMatrix, Estimate,
    JobSpec, MeasurementMode, ObservableSpec, StateSpec, TomographyJob, VarianceCheck,
};
pub use regularizer::{sample_group, Regularizer, RegularizerRegistry, DEFAULT_REGULARIZER_ID};
