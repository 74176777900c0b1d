//! Gaussian channels in the `(X, Y)` representation.
//!
//! A channel acts on covariance matrices as `sigma -> X sigma X^T + Y` and
//! is completely positive iff `Y + i Omega - i X Omega X^T >= 0`. Pure loss
//! with intensity transmissivity `eta` is `(sqrt(eta) I, (1 - eta) I)` in
//! vacuum units.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::gaussian::{symplectic_form, CovarianceState, QuadratureOrdering, SymplecticMatrix};
use crate::network::NetworkSpec;

/// A Gaussian channel `(X, Y)` on `n` modes, xxpp ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    n: usize,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl GaussianChannel {
    pub fn new(n: usize, x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != 2 * n || x.ncols() != 2 * n || y.nrows() != 2 * n || y.ncols() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: x.nrows().max(y.nrows()) });
        }
        let scale = y.amax().max(1.0);
        if (&y - y.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument("noise matrix Y must be symmetric".into()));
        }
        let y = (&y + y.transpose()) * 0.5;
        Ok(Self { n, x, y })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: DMatrix::identity(2 * n, 2 * n),
            y: DMatrix::zeros(2 * n, 2 * n),
        }
    }

    /// A symplectic transformation viewed as the noiseless channel `(S, 0)`.
    pub fn from_symplectic(s: &SymplecticMatrix) -> Self {
        let n = s.n();
        Self {
            n,
            x: s.to_ordering(QuadratureOrdering::Xxpp).matrix().clone(),
            y: DMatrix::zeros(2 * n, 2 * n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Smallest eigenvalue of the complete-positivity matrix
    /// `Y + i Omega - i X Omega X^T`. Non-negative (up to roundoff) for a
    /// physical channel.
    pub fn cp_min_eigenvalue(&self) -> f64 {
        let omega = symplectic_form(self.n, QuadratureOrdering::Xxpp);
        let xox = &self.x * &omega * self.x.transpose();
        let dim = 2 * self.n;
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(self.y[(i, j)], omega[(i, j)] - xox[(i, j)])
        });
        let eig = nalgebra::linalg::SymmetricEigen::new(m);
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_cp(&self, floor: f64) -> bool {
        self.cp_min_eigenvalue() >= floor
    }
}

/// Pure per-mode loss: `X = diag(sqrt(eta_i))` on both quadratures,
/// `Y = diag(1 - eta_i)`. `eta` is the intensity transmissivity.
pub fn loss_channel(n: usize, eta: &[f64]) -> Result<GaussianChannel> {
    if eta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: eta.len() });
    }
    for &e in eta {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidArgument(format!(
                "transmissivity must lie in [0, 1], got {e}"
            )));
        }
    }
    let mut xd = DVector::zeros(2 * n);
    let mut yd = DVector::zeros(2 * n);
    for (i, &e) in eta.iter().enumerate() {
        xd[i] = e.sqrt();
        xd[n + i] = e.sqrt();
        yd[i] = 1.0 - e;
        yd[n + i] = 1.0 - e;
    }
    GaussianChannel::new(n, DMatrix::from_diagonal(&xd), DMatrix::from_diagonal(&yd))
}

/// Channel composition, `first` applied before `second`:
/// `(X2 X1, Y2 + X2 Y1 X2^T)`.
pub fn compose(second: &GaussianChannel, first: &GaussianChannel) -> Result<GaussianChannel> {
    if second.n != first.n {
        return Err(Error::DimensionMismatch { expected: second.n, got: first.n });
    }
    let x = &second.x * &first.x;
    let y = &second.y + &second.x * &first.y * second.x.transpose();
    GaussianChannel::new(second.n, x, y)
}

/// Applies a channel to a state: `sigma -> X sigma X^T + Y`.
pub fn apply_channel(c: &GaussianChannel, state: &CovarianceState) -> Result<CovarianceState> {
    if c.n != state.n() {
        return Err(Error::DimensionMismatch { expected: c.n, got: state.n() });
    }
    let st = state.to_ordering(QuadratureOrdering::Xxpp);
    let sigma = &c.x * st.sigma() * c.x.transpose() + &c.y;
    CovarianceState::new(c.n, sigma, QuadratureOrdering::Xxpp)
}

/// The whole lossy network as one channel: each amplifier layer followed by
/// its beam-splitter layer, folded left to right. Amplitude transmittance
/// `t` enters the covariance as `eta = t^2`.
pub fn lossy_network_channel(spec: &NetworkSpec) -> GaussianChannel {
    let n = spec.n();
    let mut acc = GaussianChannel::identity(n);
    for layer in 1..=spec.depth() {
        let s = crate::network::layer_matrix(spec, layer);
        let stage = GaussianChannel { n, x: s, y: DMatrix::zeros(2 * n, 2 * n) };
        acc = compose(&stage, &acc).expect("matching dimensions");
        let eta: Vec<f64> = spec
            .transmittance_after_layer(layer)
            .iter()
            .map(|&t| t * t)
            .collect();
        if eta.iter().any(|&e| e < 1.0) {
            let loss = loss_channel(n, &eta).expect("validated transmittances");
            acc = compose(&loss, &acc).expect("matching dimensions");
        }
    }
    acc
}

/// Both orderings of a loss element against a beam splitter and against a
/// single-mode squeezer, for the ordering-equivalence comparison.
#[derive(Debug, Clone)]
pub struct CommutationReport {
    /// Beam splitter then loss (two modes).
    pub bs_loss_after: GaussianChannel,
    /// Loss then beam splitter.
    pub bs_loss_before: GaussianChannel,
    /// Max absolute difference between the two beam-splitter orderings.
    pub bs_max_abs_diff: f64,
    /// Squeezer then loss (one mode).
    pub sq_loss_after: GaussianChannel,
    /// Loss then squeezer.
    pub sq_loss_before: GaussianChannel,
    /// `Y_before - Y_after` for the squeezer case.
    pub sq_y_delta: DMatrix<f64>,
    pub sq_max_abs_diff: f64,
}

impl CommutationReport {
    pub fn bs_orderings_equal(&self, tol: f64) -> bool {
        self.bs_max_abs_diff <= tol
    }

    pub fn sq_orderings_equal(&self, tol: f64) -> bool {
        self.sq_max_abs_diff <= tol
    }
}

/// Two-mode beam splitter `R(theta)` in xxpp ordering: the same rotation on
/// the x and p sectors. Orthogonal and symplectic.
pub fn beam_splitter_symplectic(theta: f64) -> SymplecticMatrix {
    let (c, s) = (theta.cos(), theta.sin());
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            c, s, 0.0, 0.0, //
            -s, c, 0.0, 0.0, //
            0.0, 0.0, c, s, //
            0.0, 0.0, -s, c,
        ],
    );
    SymplecticMatrix::new(2, m, QuadratureOrdering::Xxpp).expect("rotations are symplectic")
}

/// Single-mode squeezer `S(r) = diag(e^r, e^-r)`.
pub fn single_mode_squeezer(r: f64) -> SymplecticMatrix {
    let m = DMatrix::from_diagonal(&DVector::from_vec(vec![r.exp(), (-r).exp()]));
    SymplecticMatrix::new(1, m, QuadratureOrdering::Xxpp).expect("squeezers are symplectic")
}

/// Compares loss placed before vs after (i) a beam splitter `R(theta_bs)`
/// and (ii) a single-mode squeezer `S(r)`, both with uniform transmissivity
/// `eta`. The beam-splitter orderings coincide; the squeezer orderings
/// differ in `Y` by `(1 - eta) (diag(e^2r, e^-2r) - I)`.
pub fn commutation_report(r: f64, theta_bs: f64, eta: f64) -> Result<CommutationReport> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "transmissivity must lie in [0, 1], got {eta}"
        )));
    }
    let bs = GaussianChannel::from_symplectic(&beam_splitter_symplectic(theta_bs));
    let loss2 = loss_channel(2, &[eta, eta])?;
    let bs_loss_after = compose(&loss2, &bs)?;
    let bs_loss_before = compose(&bs, &loss2)?;
    let bs_max_abs_diff = (&bs_loss_after.x - &bs_loss_before.x)
        .amax()
        .max((&bs_loss_after.y - &bs_loss_before.y).amax());

    let sq = GaussianChannel::from_symplectic(&single_mode_squeezer(r));
    let loss1 = loss_channel(1, &[eta])?;
    let sq_loss_after = compose(&loss1, &sq)?;
    let sq_loss_before = compose(&sq, &loss1)?;
    let sq_y_delta = &sq_loss_before.y - &sq_loss_after.y;
    let sq_max_abs_diff = (&sq_loss_after.x - &sq_loss_before.x)
        .amax()
        .max(sq_y_delta.amax());

    Ok(CommutationReport {
        bs_loss_after,
        bs_loss_before,
        bs_max_abs_diff,
        sq_loss_after,
        sq_loss_before,
        sq_y_delta,
        sq_max_abs_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::vacuum_state;
    use crate::network::{opa_symplectic, OpaSpec};
    use approx::assert_relative_eq;

    #[test]
    fn loss_eta1_is_identity() {
        let c = loss_channel(3, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.x(), &DMatrix::identity(6, 6));
        assert_eq!(c.y(), &DMatrix::zeros(6, 6));
    }

    #[test]
    fn loss_eta0_outputs_vacuum() {
        let c = loss_channel(2, &[0.0, 0.0]).unwrap();
        let tmsv = {
            let o = opa_symplectic(&OpaSpec::new(0.8, 0.0).unwrap());
            crate::gaussian::apply_symplectic(&vacuum_state(2).unwrap(), &o).unwrap()
        };
        let out = apply_channel(&c, &tmsv).unwrap();
        assert_relative_eq!((out.sigma() - DMatrix::identity(4, 4)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn loss_rejects_bad_eta() {
        assert!(loss_channel(1, &[1.1]).is_err());
        assert!(loss_channel(1, &[-0.1]).is_err());
    }

    #[test]
    fn sequential_losses_combine_multiplicatively() {
        let c1 = loss_channel(1, &[0.8]).unwrap();
        let c2 = loss_channel(1, &[0.9]).unwrap();
        let both = compose(&c2, &c1).unwrap();
        let direct = loss_channel(1, &[0.72]).unwrap();
        assert_relative_eq!((both.x() - direct.x()).amax(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((both.y() - direct.y()).amax(), 0.0, epsilon = 1e-15);
        // and commute
        let swapped = compose(&c1, &c2).unwrap();
        assert_relative_eq!((both.x() - swapped.x()).amax(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((both.y() - swapped.y()).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn compose_with_identity() {
        let c = loss_channel(2, &[0.7, 0.6]).unwrap();
        let id = GaussianChannel::identity(2);
        let out = compose(&id, &c).unwrap();
        assert_eq!(out.x(), c.x());
        assert_eq!(out.y(), c.y());
    }

    #[test]
    fn identity_channel_preserves_state() {
        let v = vacuum_state(2).unwrap();
        let out = apply_channel(&GaussianChannel::identity(2), &v).unwrap();
        assert_eq!(out.sigma(), v.sigma());
    }

    #[test]
    fn loss_channels_are_cp() {
        for eta in [0.0, 0.3, 0.7, 1.0] {
            let c = loss_channel(2, &[eta, eta]).unwrap();
            assert!(c.is_cp(-1e-10), "eta={eta}: min eig {}", c.cp_min_eigenvalue());
        }
    }

    #[test]
    fn lossless_network_channel_reduces_to_symplectic() {
        let spec = NetworkSpec::uniform(4, 3, 0.6, 0.5, 1.0).unwrap();
        let c = lossy_network_channel(&spec);
        let r = crate::network::network_symplectic(&spec);
        assert_relative_eq!((c.x() - r.matrix()).norm(), 0.0, epsilon = 1e-12);
        assert_eq!(c.y(), &DMatrix::zeros(8, 8));
    }

    #[test]
    fn single_layer_lossy_channel_closed_form() {
        // one amplifier layer at t = 0.9 gives X = 0.9 O(r), Y = 0.19 I
        let spec = NetworkSpec::uniform(2, 1, 0.8, 0.0, 0.9).unwrap();
        let c = lossy_network_channel(&spec);
        let o = opa_symplectic(&OpaSpec::new(0.8, 0.0).unwrap());
        assert_relative_eq!((c.x() - o.matrix() * 0.9).amax(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(
            (c.y() - DMatrix::identity(4, 4) * (1.0 - 0.81)).amax(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn lossy_network_channel_is_cp() {
        let spec = NetworkSpec::uniform(4, 4, 0.8, 0.0, 0.8).unwrap();
        let c = lossy_network_channel(&spec);
        assert!(
            c.cp_min_eigenvalue() >= -1e-10,
            "CP residual {}",
            c.cp_min_eigenvalue()
        );
    }

    #[test]
    fn beam_splitter_commutes_with_loss() {
        let rep = commutation_report(0.0, std::f64::consts::FRAC_PI_4, 0.7).unwrap();
        assert!(rep.bs_orderings_equal(1e-12), "diff {}", rep.bs_max_abs_diff);
        // both orderings give Y = 0.3 I
        assert_relative_eq!(
            (rep.bs_loss_after.y() - DMatrix::identity(4, 4) * 0.3).amax(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn squeezer_orderings_coincide_at_r0() {
        let rep = commutation_report(0.0, 0.5, 0.5).unwrap();
        assert!(rep.sq_orderings_equal(1e-12));
    }

    #[test]
    fn squeezer_loss_ordering_y_delta() {
        let rep = commutation_report(1.0, 0.0, 0.5).unwrap();
        assert!(!rep.sq_orderings_equal(1e-12));
        // Y_before = 0.5 diag(e^2, e^-2)
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.5 * 2.0f64.exp(),
            0.5 * (-2.0f64).exp(),
        ]));
        assert_relative_eq!((rep.sq_loss_before.y() - expect).amax(), 0.0, epsilon = 1e-12);
        // delta = (1 - eta)(diag(e^2r, e^-2r) - I)
        let delta_expect = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.5 * (2.0f64.exp() - 1.0),
            0.5 * ((-2.0f64).exp() - 1.0),
        ]));
        assert_relative_eq!((&rep.sq_y_delta - delta_expect).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn squeeze_loss_orderings_differ_in_y_only() {
        let rep = commutation_report(0.7, 0.0, 0.6).unwrap();
        assert_relative_eq!(
            (rep.sq_loss_after.x() - rep.sq_loss_before.x()).amax(),
            0.0,
            epsilon = 1e-15
        );
        assert!(rep.sq_y_delta.amax() > 1e-3);
    }
}
