//! Simulation engine for boson sampling on staggered optical-parametric-
//! amplifier networks.
//!
//! The crate propagates Gaussian covariance matrices through lossless and
//! lossy amplifier layer stacks, quantifies bipartite entanglement of the
//! output via logarithmic negativity, and evaluates photon-pattern
//! probabilities through hafnians of the output moment matrix. Two
//! independent lossy engines (channel calculus and operator moments) are
//! kept side by side and cross-validated; deep or strongly squeezed
//! networks automatically fall back to extended-precision spectra.

pub mod csv_io;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod hafnian;
pub mod loss;
pub mod moments;
pub mod network;
mod precision;
pub mod sampling;

pub use entanglement::{
    log_negativity, network_negativity, network_symplectic_spectrum, partial_transpose,
    partition_sweep, LogBase, NegativityResult, PartialTransposeMap,
};
pub use error::{Error, Result};
pub use gaussian::{
    apply_symplectic, bloch_messiah_two_mode, complex_to_quad, quad_to_complex, symplectic_form,
    symplectic_eigenvalues, vacuum_state, ComplexTransform, CovarianceState, QuadratureOrdering,
    SymplecticMatrix,
};
pub use hafnian::{hafnian_bruteforce, hafnian_fast};
pub use loss::{
    apply_channel, beam_splitter_symplectic, commutation_report, compose, loss_channel,
    lossy_network_channel, single_mode_squeezer, CommutationReport, GaussianChannel,
};
pub use moments::{operator_moment_covariance, ComplexLayerMaps};
pub use network::{
    layer_symplectic, network_symplectic, opa_symplectic, propagate_lossless, Bipartition,
    NetworkSpec, OpaSpec,
};
pub use sampling::{
    build_w, enumerate_distribution, fock_oracle_two_mode, pattern_probability, sample_patterns,
    PhotonPattern, SampleOutcome, WMatrices,
};
