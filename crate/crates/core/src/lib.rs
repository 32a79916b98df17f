//! Correlation dynamics of the transverse-field XY chain.
//!
//! The chain is mapped to free fermions; states are tracked through their Majorana
//! covariance matrices, whose infinite-chain blocks have closed-form integral kernels.
//! [`oracle`] provides exact state-vector evolution of small rings for validation.

pub mod analysis;
pub mod correlations;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod model;
pub mod oracle;
pub mod protocols;

pub use correlations::{
    correlation_field, czz_closed, czz_wick, le_lower_bound, string_xx, string_xy,
    CorrelationField, FieldGrid, FieldMetadata, FieldMethod, Observable,
};
pub use error::{Error, Result};
pub use gaussian::{block_g, covariance_at, finite_covariance, BlockG, CovarianceMatrix, Quadrature};
pub use model::{group_velocity, max_packet_speed, mode_functions, sample_dispersion, XyParams};
pub use protocols::{
    averaged_hamiltonian_field, frozen_component, quench_covariance, quench_czz_field,
    ramp_czz_field, ramp_evolution_mode, ParameterSchedule, ScheduleKind,
};
