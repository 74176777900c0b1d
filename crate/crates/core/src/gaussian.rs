//! Gaussian-state representation and symplectic algebra.
//!
//! States are zero-mean Gaussian states over `n` bosonic modes, held as a
//! `2n x 2n` real covariance matrix in vacuum units (`sigma_vac = I`), so
//! every physical state has symplectic eigenvalues `>= 1`. The canonical
//! internal ordering is block form `(x_1..x_n, p_1..p_n)`; the interleaved
//! ordering `(x_1, p_1, x_2, p_2, ...)` is supported at I/O boundaries via
//! explicit conversion.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::precision;

/// Ordering convention of the quadrature vector indexing a `2n x 2n` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureOrdering {
    /// `(x_1, ..., x_n, p_1, ..., p_n)` — the canonical internal ordering.
    Xxpp,
    /// `(x_1, p_1, x_2, p_2, ...)` — interleaved, one block per mode.
    Xpxp,
}

impl QuadratureOrdering {
    /// Index permutation taking a vector in `self` ordering to `other`
    /// ordering: `perm[i]` is the position in `other` of component `i`.
    pub fn permutation_to(self, other: QuadratureOrdering, n: usize) -> Vec<usize> {
        if self == other {
            return (0..2 * n).collect();
        }
        let mut perm = vec![0usize; 2 * n];
        match self {
            // xxpp -> xpxp: x_k at k goes to 2k, p_k at n+k goes to 2k+1
            QuadratureOrdering::Xxpp => {
                for k in 0..n {
                    perm[k] = 2 * k;
                    perm[n + k] = 2 * k + 1;
                }
            }
            QuadratureOrdering::Xpxp => {
                for k in 0..n {
                    perm[2 * k] = k;
                    perm[2 * k + 1] = n + k;
                }
            }
        }
        perm
    }

    /// Re-index a `2n x 2n` matrix from `self` ordering to `other`.
    pub fn convert_matrix(self, other: QuadratureOrdering, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows() / 2;
        let perm = self.permutation_to(other, n);
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                out[(perm[i], perm[j])] = m[(i, j)];
            }
        }
        out
    }
}

/// Symmetry drift absorbed on construction.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Floor for the physicality check on symplectic eigenvalues.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// An `n`-mode zero-mean Gaussian state: its covariance matrix, mode count,
/// and quadrature ordering. Vacuum units: `sigma_vac = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    n: usize,
    sigma: DMatrix<f64>,
    ordering: QuadratureOrdering,
}

impl CovarianceState {
    /// Wraps a covariance matrix, symmetrizing it to absorb floating-point
    /// drift from repeated products. Rejects matrices whose asymmetry is
    /// gross rather than drift-sized.
    pub fn new(n: usize, sigma: DMatrix<f64>, ordering: QuadratureOrdering) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mode count must be >= 1".into()));
        }
        if sigma.nrows() != 2 * n || sigma.ncols() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: sigma.nrows().max(sigma.ncols()),
            });
        }
        let scale = sigma.amax().max(1.0);
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > 1e-6 * scale {
            return Err(Error::InvalidArgument(format!(
                "covariance matrix is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        let sym = (&sigma + sigma.transpose()) * 0.5;
        Ok(Self { n, sigma: sym, ordering })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn ordering(&self) -> QuadratureOrdering {
        self.ordering
    }

    /// The same state re-indexed into another quadrature ordering.
    pub fn to_ordering(&self, ordering: QuadratureOrdering) -> CovarianceState {
        if ordering == self.ordering {
            return self.clone();
        }
        CovarianceState {
            n: self.n,
            sigma: self.ordering.convert_matrix(ordering, &self.sigma),
            ordering,
        }
    }

    /// True when all symplectic eigenvalues are `>= 1 - tol`.
    pub fn is_physical(&self, tol: f64) -> Result<bool> {
        let nus = symplectic_eigenvalues(self)?;
        Ok(nus.iter().all(|&v| v >= 1.0 - tol))
    }

    /// True when the state is pure: all symplectic eigenvalues equal 1
    /// within `tol`.
    pub fn is_pure(&self, tol: f64) -> Result<bool> {
        let nus = symplectic_eigenvalues(self)?;
        Ok(nus.iter().all(|&v| (v - 1.0).abs() <= tol))
    }
}

/// A real `2n x 2n` matrix `S` with `S Omega S^T = Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    m: DMatrix<f64>,
    ordering: QuadratureOrdering,
}

impl SymplecticMatrix {
    /// Checks the symplectic condition before wrapping. The residual is
    /// measured against `max(1, ||S||_F^2)` since the products in
    /// `S Omega S^T` carry roundoff proportional to the squared norm.
    pub fn new(n: usize, m: DMatrix<f64>, ordering: QuadratureOrdering) -> Result<Self> {
        if m.nrows() != 2 * n || m.ncols() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: m.nrows().max(m.ncols()),
            });
        }
        let omega = symplectic_form(n, ordering);
        let resid = (&m * &omega * m.transpose() - &omega).norm();
        let scale = m.norm_squared().max(1.0);
        if resid > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symplectic (residual {resid:.3e}, scale {scale:.3e})"
            )));
        }
        Ok(Self { n, m, ordering })
    }

    pub fn identity(n: usize, ordering: QuadratureOrdering) -> Self {
        Self { n, m: DMatrix::identity(2 * n, 2 * n), ordering }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn ordering(&self) -> QuadratureOrdering {
        self.ordering
    }

    /// Frobenius norm of `S Omega S^T - Omega`.
    pub fn symplectic_residual(&self) -> f64 {
        let omega = symplectic_form(self.n, self.ordering);
        (&self.m * &omega * self.m.transpose() - &omega).norm()
    }

    pub fn to_ordering(&self, ordering: QuadratureOrdering) -> SymplecticMatrix {
        if ordering == self.ordering {
            return self.clone();
        }
        SymplecticMatrix {
            n: self.n,
            m: self.ordering.convert_matrix(ordering, &self.m),
            ordering,
        }
    }
}

/// The unitary change of basis between quadrature and `(a, a^dagger)`
/// representations, `T = (1/sqrt 2) [[I, iI], [I, -iI]]` in xxpp ordering.
#[derive(Debug, Clone)]
pub struct ComplexTransform {
    n: usize,
    t: DMatrix<C64>,
}

impl ComplexTransform {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mode count must be >= 1".into()));
        }
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut t = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            t[(k, k)] = inv_sqrt2;
            t[(k, n + k)] = C64::new(0.0, 1.0) * inv_sqrt2;
            t[(n + k, k)] = inv_sqrt2;
            t[(n + k, n + k)] = C64::new(0.0, -1.0) * inv_sqrt2;
        }
        Ok(Self { n, t })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.t
    }

    /// Conjugates a quadrature-basis linear map into the complex basis:
    /// `T m T^dagger`.
    pub fn to_complex(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        &self.t * m * self.t.adjoint()
    }

    /// Inverse conjugation, `T^dagger m T`.
    pub fn to_quadrature(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.t.adjoint() * m * &self.t
    }
}

/// Vacuum state of `n` modes: `sigma = I` in xxpp ordering.
pub fn vacuum_state(n: usize) -> Result<CovarianceState> {
    if n == 0 {
        return Err(Error::InvalidArgument("mode count must be >= 1".into()));
    }
    CovarianceState::new(n, DMatrix::identity(2 * n, 2 * n), QuadratureOrdering::Xxpp)
}

/// The symplectic form `Omega` for `n` modes in the given ordering.
/// xxpp: `[[0, I], [-I, 0]]`; xpxp: direct sum of `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n: usize, ordering: QuadratureOrdering) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    match ordering {
        QuadratureOrdering::Xxpp => {
            for k in 0..n {
                omega[(k, n + k)] = 1.0;
                omega[(n + k, k)] = -1.0;
            }
        }
        QuadratureOrdering::Xpxp => {
            for k in 0..n {
                omega[(2 * k, 2 * k + 1)] = 1.0;
                omega[(2 * k + 1, 2 * k)] = -1.0;
            }
        }
    }
    omega
}

/// Evolves a state through a symplectic transformation: `sigma -> S sigma S^T`,
/// re-symmetrized.
pub fn apply_symplectic(state: &CovarianceState, s: &SymplecticMatrix) -> Result<CovarianceState> {
    if state.n() != s.n() {
        return Err(Error::DimensionMismatch { expected: state.n(), got: s.n() });
    }
    if state.ordering() != s.ordering() {
        return Err(Error::InvalidArgument(
            "state and symplectic matrix use different quadrature orderings".into(),
        ));
    }
    let sigma = s.matrix() * state.sigma() * s.matrix().transpose();
    CovarianceState::new(state.n(), sigma, state.ordering())
}

/// Symplectic eigenvalues of a state: the `n` positive values `nu_k` such
/// that the spectrum of `i Omega sigma` is `{+-nu_k}`, sorted ascending.
///
/// A fast non-symmetric eigensolve is used when it can resolve the smallest
/// eigenvalue above its own roundoff floor; otherwise the spectrum is
/// recomputed from the same matrix in extended precision.
pub fn symplectic_eigenvalues(state: &CovarianceState) -> Result<Vec<f64>> {
    let omega = symplectic_form(state.n(), state.ordering());
    precision::symplectic_spectrum(state.sigma(), &omega).map(|nus| nus.into_f64())
}

/// Conjugates a quadrature-basis matrix into the complex `(a, a^dagger)`
/// basis: `T m T^dagger`. Inverse of [`complex_to_quad`].
pub fn quad_to_complex(m: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    let dim = m.nrows();
    if dim != m.ncols() || dim % 2 != 0 || dim == 0 {
        return Err(Error::InvalidArgument(
            "matrix must be square with even dimension".into(),
        ));
    }
    let t = ComplexTransform::new(dim / 2)?;
    Ok(t.to_complex(&m.map(|x| C64::new(x, 0.0))))
}

/// Conjugates a complex-basis matrix back to the quadrature basis:
/// `T^dagger m T`.
pub fn complex_to_quad(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let dim = m.nrows();
    if dim != m.ncols() || dim % 2 != 0 || dim == 0 {
        return Err(Error::InvalidArgument(
            "matrix must be square with even dimension".into(),
        ));
    }
    let t = ComplexTransform::new(dim / 2)?;
    Ok(t.to_quadrature(m))
}

/// Factors the two-mode squeezer `S(r)` into a 50:50 passive matrix and a
/// pair of opposite single-mode squeezers:
/// `S(r) = B50 . diag(e^-r, e^r, e^r, e^-r) . B50^T`,
/// with `B50 = (1/sqrt 2) [[I2, I2], [-I2, I2]]` in xpxp ordering.
///
/// With this B50, the internal squeezer pair must anti-squeeze the first
/// line and squeeze the second; the opposite slot assignment reconstructs
/// `S(-r)` instead.
pub fn bloch_messiah_two_mode(r: f64) -> Result<(SymplecticMatrix, SymplecticMatrix)> {
    if !r.is_finite() {
        return Err(Error::InvalidArgument("squeezing parameter must be finite".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut b50 = DMatrix::zeros(4, 4);
    for k in 0..2 {
        b50[(k, k)] = s;
        b50[(k, 2 + k)] = s;
        b50[(2 + k, k)] = -s;
        b50[(2 + k, 2 + k)] = s;
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        (-r).exp(),
        r.exp(),
        r.exp(),
        (-r).exp(),
    ]));
    let b = SymplecticMatrix::new(2, b50, QuadratureOrdering::Xpxp)?;
    let d = SymplecticMatrix::new(2, d, QuadratureOrdering::Xpxp)?;
    Ok((b, d))
}

/// The two-mode squeezer in xpxp ordering,
/// `[[cosh r I2, sinh r Z], [sinh r Z, cosh r I2]]` with `Z = diag(1, -1)`.
pub fn two_mode_squeezer_xpxp(r: f64) -> DMatrix<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = c;
    m[(1, 1)] = c;
    m[(2, 2)] = c;
    m[(3, 3)] = c;
    m[(0, 2)] = s;
    m[(1, 3)] = -s;
    m[(2, 0)] = s;
    m[(3, 1)] = -s;
    m
}
