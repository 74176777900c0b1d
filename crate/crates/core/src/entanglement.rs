//! Logarithmic negativity across mode bipartitions.
//!
//! The partial transpose of a Gaussian state flips the sign of subsystem
//! B's momentum quadratures; entanglement is read off the symplectic
//! eigenvalues of the transposed covariance that drop below the vacuum
//! value. Values are reported in bits (base-2 logs) by default.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceState, QuadratureOrdering};
use crate::network::{Bipartition, NetworkSpec};
use crate::precision::{self, PropagationStep};

/// Logarithm base for reported negativities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    /// Bits (log base 2).
    #[default]
    Two,
    /// Nats (natural log).
    Natural,
}

impl LogBase {
    fn from_log2(self, bits: f64) -> f64 {
        match self {
            LogBase::Two => bits,
            LogBase::Natural => bits * std::f64::consts::LN_2,
        }
    }
}

/// The diagonal `+-1` map realizing partial transposition of subsystem B:
/// `+1` on every x quadrature and on A's momenta, `-1` on B's momenta.
#[derive(Debug, Clone)]
pub struct PartialTransposeMap {
    n: usize,
    b_modes: Vec<usize>,
}

impl PartialTransposeMap {
    pub fn new(partition: &Bipartition) -> Self {
        Self { n: partition.n(), b_modes: partition.b_modes().to_vec() }
    }

    /// Signs along the diagonal, xxpp ordering.
    pub fn diagonal_signs(&self) -> Vec<f64> {
        let mut d = vec![1.0; 2 * self.n];
        for &m in &self.b_modes {
            d[self.n + m] = -1.0;
        }
        d
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.diagonal_signs();
        DMatrix::from_fn(2 * self.n, 2 * self.n, |i, j| if i == j { d[i] } else { 0.0 })
    }
}

/// Negativity of one bipartition: the value, the partial-transpose
/// symplectic eigenvalues it came from, and the partition itself.
#[derive(Debug, Clone)]
pub struct NegativityResult {
    pub value: f64,
    pub nu_tilde: Vec<f64>,
    pub partition: Bipartition,
}

/// Partial transpose `sigma -> D sigma D`. Sign flips are exact, so the
/// map is an exact involution.
pub fn partial_transpose(
    state: &CovarianceState,
    partition: &Bipartition,
) -> Result<CovarianceState> {
    if partition.n() != state.n() {
        return Err(Error::DimensionMismatch { expected: state.n(), got: partition.n() });
    }
    let st = state.to_ordering(QuadratureOrdering::Xxpp);
    let signs = PartialTransposeMap::new(partition).diagonal_signs();
    let n2 = 2 * state.n();
    let mut sigma = st.sigma().clone();
    for i in 0..n2 {
        for j in 0..n2 {
            sigma[(i, j)] *= signs[i] * signs[j];
        }
    }
    CovarianceState::new(state.n(), sigma, QuadratureOrdering::Xxpp)
}

/// Eigenvalues within this distance of 1 contribute exactly zero,
/// suppressing negative-zero noise at the separability boundary.
const UNITY_CLAMP: f64 = 1e-12;

fn negativity_from_log2s(log2s: &[f64], base: LogBase) -> f64 {
    let bits: f64 = log2s
        .iter()
        .filter(|&&l| l < 0.0 && l.abs() > 2.0 * UNITY_CLAMP)
        .map(|&l| -l)
        .sum();
    // an empty sum is -0.0; report separable states as plain zero
    let bits = if bits == 0.0 { 0.0 } else { bits };
    base.from_log2(bits)
}

/// Logarithmic negativity of a state across a bipartition:
/// `E = sum_k max(0, -log nu_tilde_k)` over the partial-transpose
/// symplectic eigenvalues.
pub fn log_negativity(
    state: &CovarianceState,
    partition: &Bipartition,
    base: LogBase,
) -> Result<NegativityResult> {
    if partition.n() != state.n() {
        return Err(Error::DimensionMismatch { expected: state.n(), got: partition.n() });
    }
    let nus = crate::gaussian::symplectic_eigenvalues(state)?;
    if nus.iter().any(|&v| v < 1.0 - 1e-6) {
        return Err(Error::InvalidState(format!(
            "state is unphysical: smallest symplectic eigenvalue {:.6e}",
            nus.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let st = state.to_ordering(QuadratureOrdering::Xxpp);
    let pt = partial_transpose(&st, partition)?;
    let omega = crate::gaussian::symplectic_form(state.n(), QuadratureOrdering::Xxpp);
    let spec = precision::symplectic_spectrum(pt.sigma(), &omega)?;
    Ok(NegativityResult {
        value: negativity_from_log2s(&spec.log2s, base),
        nu_tilde: spec.values,
        partition: partition.clone(),
    })
}

/// One negativity per partition, order-preserving. Any invalid partition
/// fails the whole call.
pub fn partition_sweep(
    state: &CovarianceState,
    partitions: &[Bipartition],
    base: LogBase,
) -> Result<Vec<NegativityResult>> {
    for p in partitions {
        if p.n() != state.n() {
            return Err(Error::DimensionMismatch { expected: state.n(), got: p.n() });
        }
    }
    partitions.iter().map(|p| log_negativity(state, p, base)).collect()
}

/// Propagation steps of a network acting on vacuum, in the parametric
/// layer form the extended-precision rebuild requires.
pub(crate) fn network_steps(spec: &NetworkSpec) -> Vec<PropagationStep> {
    let mut steps = Vec::with_capacity(2 * spec.depth());
    for layer in 1..=spec.depth() {
        steps.push(PropagationStep::OpaLayer {
            matrix: crate::network::layer_matrix(spec, layer),
            pairs: spec.pairs_in_layer(layer),
            params: spec
                .opas_in_layer(layer)
                .iter()
                .map(|o| (o.r, o.theta))
                .collect(),
        });
        let ts = spec.transmittance_after_layer(layer);
        if ts.iter().any(|&t| t < 1.0) {
            steps.push(PropagationStep::PerModeLoss(ts.to_vec()));
        }
    }
    steps
}

/// Negativity of a network's vacuum output, rebuilding the covariance in
/// extended precision whenever double precision cannot resolve the
/// partial-transpose spectrum (deep or strongly squeezed networks).
pub fn network_negativity(
    spec: &NetworkSpec,
    partition: &Bipartition,
    base: LogBase,
) -> Result<NegativityResult> {
    if partition.n() != spec.n() {
        return Err(Error::DimensionMismatch { expected: spec.n(), got: partition.n() });
    }
    let steps = network_steps(spec);
    let spectrum =
        precision::pt_spectrum_from_steps(spec.n(), &steps, partition.b_modes())?;
    Ok(NegativityResult {
        value: negativity_from_log2s(&spectrum.log2s, base),
        nu_tilde: spectrum.values,
        partition: partition.clone(),
    })
}

/// Purity diagnostic on the network output computed the same robust way:
/// the plain symplectic spectrum (no transpose).
pub fn network_symplectic_spectrum(spec: &NetworkSpec) -> Result<Vec<f64>> {
    let steps = network_steps(spec);
    Ok(precision::pt_spectrum_from_steps(spec.n(), &steps, &[])?.into_f64())
}
