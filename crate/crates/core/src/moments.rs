//! Operator-moment engine for the lossy network.
//!
//! Validation path independent of the channel calculus: the network is
//! grouped into blocks of two amplifier layers with their beam splitters,
//! each block written as a Bogoliubov map on the mode operators plus
//! couplings to fresh environment operators. Second moments of the output
//! operators over the vacuum environment are accumulated directly and then
//! rotated back into the quadrature covariance.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::gaussian::{symplectic_form, ComplexTransform, CovarianceState, QuadratureOrdering};
use crate::network::NetworkSpec;

/// The three maps of one two-layer block acting on `(a, a^dagger)`:
/// `v` on the incoming mode operators, `u` on the first beam-splitter
/// layer's environment, `q` on the second one's.
#[derive(Debug, Clone)]
pub struct ComplexLayerMaps {
    pub v: DMatrix<C64>,
    pub u: DMatrix<C64>,
    pub q: DMatrix<C64>,
}

impl ComplexLayerMaps {
    /// Residual of the commutation-preservation identity
    /// `V J V^dag + U J U^dag + Q J Q^dag = J` with `J = diag(I, -I)`.
    /// Zero (to roundoff) for a physical block.
    pub fn commutation_residual(&self) -> f64 {
        let dim = self.v.nrows();
        let n = dim / 2;
        let j = DMatrix::from_fn(dim, dim, |i, k| {
            if i == k {
                C64::new(if i < n { 1.0 } else { -1.0 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let sum = &self.v * &j * self.v.adjoint()
            + &self.u * &j * self.u.adjoint()
            + &self.q * &j * self.q.adjoint();
        (sum - j).map(|z| z.norm()).max()
    }
}

/// `(M, N)` blocks of one amplifier layer on annihilation operators:
/// `a -> M a + N a^dagger`. `M` is real diagonal (cosh), `N` symmetric with
/// `-e^{i theta} sinh r` on each coupled pair.
fn layer_mn(spec: &NetworkSpec, layer: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = spec.n();
    let mut m = DMatrix::zeros(n, n);
    let mut nn = DMatrix::zeros(n, n);
    let mut used = vec![false; n];
    for (opa, (a, b)) in spec
        .opas_in_layer(layer)
        .iter()
        .zip(spec.pairs_in_layer(layer))
    {
        m[(a, a)] = C64::new(opa.r.cosh(), 0.0);
        m[(b, b)] = C64::new(opa.r.cosh(), 0.0);
        let coupling = -C64::new(0.0, opa.theta).exp() * opa.r.sinh();
        nn[(a, b)] = coupling;
        nn[(b, a)] = coupling;
        used[a] = true;
        used[b] = true;
    }
    for i in 0..n {
        if !used[i] {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
    }
    (m, nn)
}

/// Diagonal `(T, R)` of one beam-splitter layer: `a -> T a + R f`.
fn layer_tr(spec: &NetworkSpec, layer: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = spec.n();
    let ts = spec.transmittance_after_layer(layer);
    let t = DMatrix::from_fn(n, n, |i, j| {
        if i == j { C64::new(ts[i], 0.0) } else { C64::new(0.0, 0.0) }
    });
    let r = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new((1.0 - ts[i] * ts[i]).max(0.0).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    (t, r)
}

fn bogoliubov(top_left: &DMatrix<C64>, top_right: &DMatrix<C64>) -> DMatrix<C64> {
    let n = top_left.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = top_left[(i, j)];
            out[(i, n + j)] = top_right[(i, j)];
            out[(n + i, j)] = top_right[(i, j)].conj();
            out[(n + i, n + j)] = top_left[(i, j)].conj();
        }
    }
    out
}

/// Builds the block maps for two consecutive layers `2i-1`, `2i`. When the
/// depth is odd the final block's second layer is a virtual identity with
/// unit transmittance.
pub fn two_layer_maps(spec: &NetworkSpec, block: usize) -> Result<ComplexLayerMaps> {
    let n = spec.n();
    let d = spec.depth();
    let first = 2 * block - 1;
    if first > d {
        return Err(Error::InvalidArgument(format!("block {block} out of range")));
    }
    let (m1, n1) = layer_mn(spec, first);
    let (t1, r1) = layer_tr(spec, first);
    let (m2, n2, t2, r2) = if first + 1 <= d {
        let (m2, n2) = layer_mn(spec, first + 1);
        let (t2, r2) = layer_tr(spec, first + 1);
        (m2, n2, t2, r2)
    } else {
        (
            DMatrix::identity(n, n),
            DMatrix::zeros(n, n),
            DMatrix::identity(n, n),
            DMatrix::zeros(n, n),
        )
    };

    // a -> P a + X a^dag + Y f1 + Z f1^dag + R2 f2
    let p = &t2 * &m2 * &t1 * &m1 + &t2 * &n2 * &t1 * n1.map(|z| z.conj());
    let x = &t2 * &m2 * &t1 * &n1 + &t2 * &n2 * &t1 * m1.map(|z| z.conj());
    let yb = &t2 * &m2 * &r1;
    let zb = &t2 * &n2 * &r1;

    Ok(ComplexLayerMaps {
        v: bogoliubov(&p, &x),
        u: bogoliubov(&yb, &zb),
        q: bogoliubov(&r2, &DMatrix::zeros(n, n)),
    })
}

/// Output covariance via the operator-moment route: accumulate
/// `<A_out A_out>` over the vacuum input and environments, then rotate to
/// quadratures. Odd depths get a virtual identity layer appended.
pub fn operator_moment_covariance(spec: &NetworkSpec) -> Result<CovarianceState> {
    let n = spec.n();
    let blocks = spec.depth().div_ceil(2);
    let maps: Vec<ComplexLayerMaps> =
        (1..=blocks).map(|b| two_layer_maps(spec, b)).collect::<Result<_>>()?;

    // <B_x B_y> over vacuum: only <b b^dag> = I survives
    let e = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if j == n + i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
    });

    // suffix products V_m ... V_{i+1}
    let mut suffix = vec![DMatrix::identity(2 * n, 2 * n)];
    for maps_i in maps.iter().rev() {
        let prev = suffix.last().unwrap();
        suffix.push(prev * &maps_i.v);
    }
    suffix.reverse(); // suffix[i] = V_m ... V_{i+1}, suffix[m] = I ... index 0 = full product

    let full = &suffix[0];
    let mut gamma = full * &e * full.transpose();
    for (i, maps_i) in maps.iter().enumerate() {
        let pfx = &suffix[i + 1];
        let cu = pfx * &maps_i.u;
        let cq = pfx * &maps_i.q;
        gamma += &cu * &e * cu.transpose();
        gamma += &cq * &e * cq.transpose();
    }

    // sigma + i Omega = 2 T^dag Gamma conj(T)
    let t = ComplexTransform::new(n)?;
    let tm = t.matrix();
    let sig_c = (tm.adjoint() * gamma * tm.map(|z| z.conj())) * C64::new(2.0, 0.0);

    let omega = symplectic_form(n, QuadratureOrdering::Xxpp);
    let mut imag_resid = 0.0f64;
    let mut sigma = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        for j in 0..2 * n {
            sigma[(i, j)] = sig_c[(i, j)].re;
            imag_resid = imag_resid.max((sig_c[(i, j)].im - omega[(i, j)]).abs());
        }
    }
    let scale = sigma.amax().max(1.0);
    if imag_resid > 1e-9 * scale {
        return Err(Error::NumericalFailure(format!(
            "moment accumulation inconsistent: commutator residue {imag_resid:.3e}"
        )));
    }
    CovarianceState::new(n, sigma, QuadratureOrdering::Xxpp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::vacuum_state;
    use crate::loss::{apply_channel, lossy_network_channel};
    use crate::network::propagate_lossless;

    #[test]
    fn lossless_reduction_matches_symplectic_pipeline() {
        let spec = NetworkSpec::uniform(4, 4, 0.7, 0.9, 1.0).unwrap();
        let via_moments = operator_moment_covariance(&spec).unwrap();
        let via_symplectic = propagate_lossless(&spec, &vacuum_state(4).unwrap()).unwrap();
        let err = (via_moments.sigma() - via_symplectic.sigma()).norm();
        assert!(err < 1e-10, "lossless mismatch {err:.3e}");
    }

    #[test]
    fn matches_channel_engine_with_loss() {
        let spec = NetworkSpec::uniform(2, 2, 0.8, 0.0, 0.9).unwrap();
        let via_moments = operator_moment_covariance(&spec).unwrap();
        let via_channel =
            apply_channel(&lossy_network_channel(&spec), &vacuum_state(2).unwrap()).unwrap();
        let err = (via_moments.sigma() - via_channel.sigma()).norm();
        assert!(err < 1e-10, "cross-engine mismatch {err:.3e}");
    }

    #[test]
    fn odd_depth_uses_virtual_identity_layer() {
        let spec = NetworkSpec::uniform(4, 3, 0.5, 0.4, 0.8).unwrap();
        let via_moments = operator_moment_covariance(&spec).unwrap();
        let via_channel =
            apply_channel(&lossy_network_channel(&spec), &vacuum_state(4).unwrap()).unwrap();
        let err = (via_moments.sigma() - via_channel.sigma()).norm();
        assert!(err < 1e-10, "odd-depth mismatch {err:.3e}");
    }

    #[test]
    fn zero_squeezing_gives_vacuum_for_any_loss() {
        let spec = NetworkSpec::uniform(4, 4, 0.0, 0.0, 0.7).unwrap();
        let out = operator_moment_covariance(&spec).unwrap();
        let err = (out.sigma() - DMatrix::identity(8, 8)).norm();
        assert!(err < 1e-12, "vacuum not preserved: {err:.3e}");
    }

    #[test]
    fn block_maps_preserve_commutators() {
        let spec = NetworkSpec::uniform(4, 4, 0.9, 1.3, 0.85).unwrap();
        for block in 1..=2 {
            let maps = two_layer_maps(&spec, block).unwrap();
            let resid = maps.commutation_residual();
            assert!(resid < 1e-10, "block {block}: residual {resid:.3e}");
        }
    }
}
