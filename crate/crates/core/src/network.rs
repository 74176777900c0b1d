//! The staggered two-mode-squeezer network.
//!
//! Odd layers place one amplifier on each mode pair `(1,2), (3,4), ...`;
//! even layers shift by one mode, acting on `(2,3), (4,5), ...` with the
//! first and last mode passing through untouched. Beam splitters with
//! amplitude transmittance `t` after each layer model photon loss (the
//! covariance-level transmissivity is `eta = t^2`).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{
    apply_symplectic, CovarianceState, QuadratureOrdering, SymplecticMatrix,
};

/// Parameters of a single optical parametric amplifier: squeezing magnitude
/// `r >= 0` and squeezing angle `theta`, normalized to `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpaSpec {
    pub r: f64,
    pub theta: f64,
}

impl OpaSpec {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "squeezing magnitude must be finite and >= 0, got {r}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("squeezing angle must be finite".into()));
        }
        let tau = 2.0 * std::f64::consts::PI;
        Ok(Self { r, theta: theta.rem_euclid(tau) })
    }
}

/// Full description of a network: mode count `n` (even), depth `d`, the
/// per-layer amplifier table, and the per-layer per-mode beam-splitter
/// amplitude transmittances.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    n: usize,
    d: usize,
    /// `opas[l][j]`: amplifier `j` of layer `l+1`. Odd layers hold `n/2`
    /// entries, even layers `n/2 - 1`.
    opas: Vec<Vec<OpaSpec>>,
    /// `transmittance[l][i]`: amplitude transmittance of the beam splitter
    /// on mode `i` after layer `l+1`.
    transmittance: Vec<Vec<f64>>,
}

impl NetworkSpec {
    pub fn new(
        n: usize,
        d: usize,
        opas: Vec<Vec<OpaSpec>>,
        transmittance: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "mode count must be even and >= 2, got {n}"
            )));
        }
        if d < 1 {
            return Err(Error::InvalidArgument("depth must be >= 1".into()));
        }
        if opas.len() != d {
            return Err(Error::InvalidArgument(format!(
                "expected {d} layers of amplifiers, got {}",
                opas.len()
            )));
        }
        for (l, layer) in opas.iter().enumerate() {
            let want = Self::slots_in_layer(n, l + 1);
            if layer.len() != want {
                return Err(Error::InvalidArgument(format!(
                    "layer {} must hold {want} amplifiers, got {}",
                    l + 1,
                    layer.len()
                )));
            }
        }
        if transmittance.len() != d {
            return Err(Error::InvalidArgument(format!(
                "expected {d} transmittance layers, got {}",
                transmittance.len()
            )));
        }
        for (l, ts) in transmittance.iter().enumerate() {
            if ts.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "transmittance layer {} must hold {n} values, got {}",
                    l + 1,
                    ts.len()
                )));
            }
            for &t in ts {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::InvalidArgument(format!(
                        "transmittance must lie in [0, 1], got {t}"
                    )));
                }
            }
        }
        Ok(Self { n, d, opas, transmittance })
    }

    /// Uniform network: the same `(r, theta)` on every amplifier and the
    /// same transmittance `t` on every beam splitter.
    pub fn uniform(n: usize, d: usize, r: f64, theta: f64, t: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "mode count must be even and >= 2, got {n}"
            )));
        }
        let opa = OpaSpec::new(r, theta)?;
        let opas = (1..=d)
            .map(|l| vec![opa; Self::slots_in_layer(n, l)])
            .collect();
        let transmittance = vec![vec![t; n]; d];
        Self::new(n, d, opas, transmittance)
    }

    fn slots_in_layer(n: usize, layer: usize) -> usize {
        if layer % 2 == 1 {
            n / 2
        } else {
            n / 2 - 1
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.d
    }

    /// Amplifiers of a 1-based layer.
    pub fn opas_in_layer(&self, layer: usize) -> &[OpaSpec] {
        &self.opas[layer - 1]
    }

    /// Per-mode amplitude transmittances after a 1-based layer.
    pub fn transmittance_after_layer(&self, layer: usize) -> &[f64] {
        &self.transmittance[layer - 1]
    }

    /// 0-based mode pairs the amplifiers of a 1-based layer act on.
    pub fn pairs_in_layer(&self, layer: usize) -> Vec<(usize, usize)> {
        if layer % 2 == 1 {
            (0..self.n / 2).map(|j| (2 * j, 2 * j + 1)).collect()
        } else {
            (0..self.n / 2 - 1).map(|j| (2 * j + 1, 2 * j + 2)).collect()
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.transmittance.iter().flatten().all(|&t| t == 1.0)
    }
}

/// An ordered bipartition of modes `{0..n-1}` into non-empty complementary
/// sets A and B (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    n: usize,
    a_modes: Vec<usize>,
    b_modes: Vec<usize>,
}

impl Bipartition {
    pub fn new(n: usize, a_modes: Vec<usize>, b_modes: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        if a_modes.is_empty() || b_modes.is_empty() {
            return Err(Error::InvalidArgument("both subsystems must be non-empty".into()));
        }
        for &m in a_modes.iter().chain(b_modes.iter()) {
            if m >= n {
                return Err(Error::InvalidArgument(format!("mode index {m} out of range")));
            }
            if seen[m] {
                return Err(Error::InvalidArgument(format!("mode {m} assigned twice")));
            }
            seen[m] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidArgument("partition must cover all modes".into()));
        }
        Ok(Self { n, a_modes, b_modes })
    }

    /// `A = {0..n_a-1}`, `B = {n_a..n-1}` — the contiguous cut written
    /// `(n_a, n - n_a)`.
    pub fn contiguous(n: usize, n_a: usize) -> Result<Self> {
        if n_a == 0 || n_a >= n {
            return Err(Error::InvalidArgument(format!(
                "contiguous cut requires 0 < n_a < n, got n_a={n_a}, n={n}"
            )));
        }
        Self::new(n, (0..n_a).collect(), (n_a..n).collect())
    }

    /// A holds the even-indexed modes, B the odd-indexed ones. Every
    /// amplifier in the staggered network straddles this cut, which makes
    /// it free of the boundary-parity artifacts contiguous cuts show.
    pub fn interleaved(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two modes".into()));
        }
        Self::new(
            n,
            (0..n).step_by(2).collect(),
            (1..n).step_by(2).collect(),
        )
    }

    /// B given explicitly; A is the complement.
    pub fn from_b_modes(n: usize, b_modes: Vec<usize>) -> Result<Self> {
        let a_modes: Vec<usize> = (0..n).filter(|m| !b_modes.contains(m)).collect();
        Self::new(n, a_modes, b_modes)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a_modes(&self) -> &[usize] {
        &self.a_modes
    }

    pub fn b_modes(&self) -> &[usize] {
        &self.b_modes
    }

    pub fn swapped(&self) -> Bipartition {
        Bipartition {
            n: self.n,
            a_modes: self.b_modes.clone(),
            b_modes: self.a_modes.clone(),
        }
    }

    /// Short display label: `(a,b)` for contiguous cuts, `interleaved` for
    /// the alternating cut, otherwise the explicit mode lists.
    pub fn label(&self) -> String {
        let contiguous = self.a_modes.iter().enumerate().all(|(i, &m)| m == i)
            && self.b_modes.iter().enumerate().all(|(i, &m)| m == self.a_modes.len() + i);
        if contiguous {
            return format!("({},{})", self.a_modes.len(), self.b_modes.len());
        }
        let inter = Bipartition::interleaved(self.n);
        if let Ok(inter) = inter {
            if *self == inter {
                return "interleaved".into();
            }
        }
        let fmt = |v: &[usize]| {
            v.iter().map(|m| (m + 1).to_string()).collect::<Vec<_>>().join(";")
        };
        format!("{}|{}", fmt(&self.a_modes), fmt(&self.b_modes))
    }
}

/// The 4x4 symplectic matrix of one amplifier in xxpp ordering:
/// A-blocks `cosh r` with `-cos(theta) sinh r` off-diagonal, B-blocks
/// `-sin(theta) sinh r` anti-diagonal, C-blocks with the opposite sign of
/// the A off-diagonal.
pub fn opa_symplectic(spec: &OpaSpec) -> SymplecticMatrix {
    let (c, s) = (spec.r.cosh(), spec.r.sinh());
    let (ct, st) = (spec.theta.cos(), spec.theta.sin());
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            c, -ct * s, 0.0, -st * s, //
            -ct * s, c, -st * s, 0.0, //
            0.0, -st * s, c, ct * s, //
            -st * s, 0.0, ct * s, c,
        ],
    );
    SymplecticMatrix::new(2, m, QuadratureOrdering::Xxpp)
        .expect("amplifier matrix is symplectic by construction")
}

pub(crate) fn layer_matrix(spec: &NetworkSpec, layer: usize) -> DMatrix<f64> {
    let n = spec.n();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    let mut used = vec![false; n];
    for (&opa, (a, b)) in spec.opas_in_layer(layer).iter().zip(spec.pairs_in_layer(layer)) {
        let (c, s) = (opa.r.cosh(), opa.r.sinh());
        let (ct, st) = (opa.theta.cos(), opa.theta.sin());
        let modes = [a, b];
        for (ii, &i) in modes.iter().enumerate() {
            for (jj, &j) in modes.iter().enumerate() {
                let (av, bv, cv) = if ii == jj {
                    (c, 0.0, c)
                } else {
                    (-ct * s, -st * s, ct * s)
                };
                m[(i, j)] = av;
                m[(i, n + j)] = bv;
                m[(n + i, j)] = bv;
                m[(n + i, n + j)] = cv;
            }
        }
        used[a] = true;
        used[b] = true;
    }
    for i in 0..n {
        if !used[i] {
            m[(i, i)] = 1.0;
            m[(n + i, n + i)] = 1.0;
        }
    }
    m
}

/// The symplectic matrix of one layer (1-based index).
pub fn layer_symplectic(spec: &NetworkSpec, layer: usize) -> Result<SymplecticMatrix> {
    if layer == 0 || layer > spec.depth() {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} out of range 1..={}",
            spec.depth()
        )));
    }
    SymplecticMatrix::new(spec.n(), layer_matrix(spec, layer), QuadratureOrdering::Xxpp)
}

/// The whole-network transform, layer 1 applied first:
/// `R = S^(d) ... S^(2) S^(1)`.
pub fn network_symplectic(spec: &NetworkSpec) -> SymplecticMatrix {
    let n = spec.n();
    let mut r = DMatrix::identity(2 * n, 2 * n);
    for layer in 1..=spec.depth() {
        r = layer_matrix(spec, layer) * r;
    }
    SymplecticMatrix::new(n, r, QuadratureOrdering::Xxpp)
        .expect("products of symplectic layers stay symplectic")
}

/// Lossless propagation `sigma -> R sigma R^T`. All transmittances must
/// equal one; use the loss-channel pipeline otherwise.
pub fn propagate_lossless(spec: &NetworkSpec, input: &CovarianceState) -> Result<CovarianceState> {
    if input.n() != spec.n() {
        return Err(Error::DimensionMismatch { expected: spec.n(), got: input.n() });
    }
    if !spec.is_lossless() {
        return Err(Error::InvalidArgument(
            "network has lossy beam splitters; use the channel pipeline".into(),
        ));
    }
    let input = input.to_ordering(QuadratureOrdering::Xxpp);
    apply_symplectic(&input, &network_symplectic(spec))
}
