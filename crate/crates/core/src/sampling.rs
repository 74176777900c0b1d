//! Photon-pattern probabilities and desk-scale sampling.
//!
//! The covariance matrix is rotated into the normal-ordered complex moment
//! matrix `G`; pattern probabilities are hafnians of block-replicated
//! submatrices of `W = [[0, I], [I, 0]] G (G + I)^{-1}`, normalized by
//! `sqrt(det(I + G))` and the pattern factorials. A truncated-Fock-space
//! construction of the lossy two-mode squeezed state serves as the
//! independent oracle that pins the basis conventions.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::gaussian::{ComplexTransform, CovarianceState, QuadratureOrdering};
use crate::hafnian::hafnian_fast;

/// Photon counts per mode for one detection event.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhotonPattern {
    pub counts: Vec<u32>,
}

impl PhotonPattern {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Semicolon-joined counts, the CSV export form.
    pub fn label(&self) -> String {
        self.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
    }
}

/// The matrices entering the pattern-probability formula for one state.
#[derive(Debug, Clone)]
pub struct WMatrices {
    /// Normal-ordered complex moment matrix of the output state.
    pub g: DMatrix<C64>,
    /// `[[0, I], [I, 0]] G (G + I)^{-1}`; symmetric.
    pub w: DMatrix<C64>,
    /// `sqrt(det(I + G))`, real and positive for physical states.
    pub normalization: f64,
    n: usize,
}

impl WMatrices {
    pub fn n(&self) -> usize {
        self.n
    }
}

const MAX_PATTERN_TOTAL: u32 = 20;
const ENUM_MAX_MODES: usize = 6;
const ENUM_MAX_TOTAL: u32 = 8;

/// Builds `G`, `W`, and the normalization from a covariance matrix.
///
/// `G` lives in the `(a, a^dagger)` basis: with `T` the quadrature-to-
/// complex transform, `G = (T sigma T^dagger - I) / 2`, whose entries are
/// the normal-ordered second moments. The vacuum gives `G = 0`.
pub fn build_w(state: &CovarianceState) -> Result<WMatrices> {
    let n = state.n();
    let st = state.to_ordering(QuadratureOrdering::Xxpp);
    let t = ComplexTransform::new(n)?;
    let sigma_c = st.sigma().map(|x| C64::new(x, 0.0));
    let id = DMatrix::<C64>::identity(2 * n, 2 * n);
    let g = (t.matrix() * sigma_c * t.matrix().adjoint() - &id) * C64::new(0.5, 0.0);

    let g_plus_i = &g + &id;
    let det = g_plus_i.determinant();
    let inv = g_plus_i.clone().try_inverse().ok_or_else(|| {
        Error::NumericalFailure("G + I is singular".into())
    })?;
    let cond = g_plus_i.norm() * inv.norm();
    if cond > 1e12 {
        return Err(Error::NumericalFailure(format!(
            "G + I too ill-conditioned (estimate {cond:.3e})"
        )));
    }
    if det.re <= 0.0 || det.im.abs() > 1e-9 * det.re.abs().max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "det(I + G) = {det} is not real positive"
        )));
    }

    let mut swap = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for k in 0..n {
        swap[(k, n + k)] = C64::new(1.0, 0.0);
        swap[(n + k, k)] = C64::new(1.0, 0.0);
    }
    let w = swap * &g * inv;

    // W is symmetric for any valid covariance; a violation means the input
    // was not a physical state
    let scale = w.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let asym = (&w - w.transpose()).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if asym > 1e-9 * scale {
        return Err(Error::NumericalFailure(format!(
            "pattern matrix failed its symmetry check (asymmetry {asym:.3e})"
        )));
    }
    let w = (w.clone() + w.transpose()) * C64::new(0.5, 0.0);

    Ok(WMatrices { g, w, normalization: det.re.sqrt(), n })
}

fn factorial_f64(k: u32) -> f64 {
    (1..=k as u128).product::<u128>() as f64
}

/// Probability of one photon pattern. The block replication keeps mode
/// `i`'s row/column `n_i` times in both the annihilation and creation
/// sectors; pattern `(1, 1, ..., 1)` reproduces `W` itself.
pub fn pattern_probability(w: &WMatrices, pattern: &PhotonPattern) -> Result<f64> {
    if pattern.counts.len() != w.n {
        return Err(Error::DimensionMismatch { expected: w.n, got: pattern.counts.len() });
    }
    let total = pattern.total();
    if total > MAX_PATTERN_TOTAL {
        return Err(Error::ResourceLimit(format!(
            "pattern holds {total} photons, cap is {MAX_PATTERN_TOTAL}"
        )));
    }

    let mut idx = Vec::with_capacity(2 * total as usize);
    for (mode, &c) in pattern.counts.iter().enumerate() {
        for _ in 0..c {
            idx.push(mode);
        }
    }
    let reps = idx.len();
    for k in 0..reps {
        idx.push(idx[k] + w.n);
    }

    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| w.w[(idx[i], idx[j])]);
    let haf = hafnian_fast(&sub)?;

    let denom: f64 = pattern.counts.iter().map(|&c| factorial_f64(c)).product();
    let p = haf.re / (w.normalization * denom);
    let imag = haf.im.abs() / (w.normalization * denom);
    if imag > 1e-9 {
        log::warn!(
            "pattern {} probability carries imaginary residue {imag:.3e}; discarded",
            pattern.label()
        );
    }
    Ok(p)
}

/// All patterns with at most `max_total` photons, probabilities attached,
/// plus the residual mass `1 - sum p`. Patterns come out in lexicographic
/// order. Guarded to desk scale.
pub fn enumerate_distribution(
    w: &WMatrices,
    max_total: u32,
) -> Result<(Vec<(PhotonPattern, f64)>, f64)> {
    if w.n > ENUM_MAX_MODES {
        return Err(Error::ResourceLimit(format!(
            "enumeration supports at most {ENUM_MAX_MODES} modes, state has {}",
            w.n
        )));
    }
    if max_total > ENUM_MAX_TOTAL {
        return Err(Error::ResourceLimit(format!(
            "enumeration supports at most {ENUM_MAX_TOTAL} total photons, asked for {max_total}"
        )));
    }

    let mut patterns = Vec::new();
    let mut counts = vec![0u32; w.n];
    enumerate_rec(&mut counts, 0, max_total, &mut patterns);
    patterns.sort_by(|a, b| a.counts.cmp(&b.counts));

    let mut out = Vec::with_capacity(patterns.len());
    let mut mass = 0.0f64;
    for p in patterns {
        let prob = pattern_probability(w, &p)?;
        mass += prob;
        out.push((p, prob));
    }
    let residual = 1.0 - mass;
    if residual < -1e-8 {
        return Err(Error::NumericalFailure(format!(
            "enumerated mass exceeds one by {:.3e}",
            -residual
        )));
    }
    Ok((out, residual))
}

fn enumerate_rec(counts: &mut Vec<u32>, mode: usize, budget: u32, out: &mut Vec<PhotonPattern>) {
    if mode == counts.len() {
        out.push(PhotonPattern::new(counts.clone()));
        return;
    }
    for c in 0..=budget {
        counts[mode] = c;
        enumerate_rec(counts, mode + 1, budget - c, out);
    }
    counts[mode] = 0;
}

/// One draw from a categorical sampler: either a pattern from the
/// enumerated support, or the overflow sentinel carrying the residual
/// mass beyond the enumeration budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleOutcome {
    Pattern(PhotonPattern),
    Overflow,
}

impl SampleOutcome {
    pub fn label(&self) -> String {
        match self {
            SampleOutcome::Pattern(p) => p.label(),
            SampleOutcome::Overflow => "overflow".into(),
        }
    }
}

/// Draws `count` samples from an enumerated distribution. The RNG is
/// ChaCha12 seeded from the u64 via the standard split-mix expansion, so a
/// fixed seed reproduces the same sequence on every platform. Negative
/// probability noise is clamped to zero; residual mass becomes the
/// overflow outcome.
pub fn sample_patterns(
    distribution: &[(PhotonPattern, f64)],
    residual: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SampleOutcome>> {
    if distribution.is_empty() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    let mut cumulative = Vec::with_capacity(distribution.len() + 1);
    let mut acc = 0.0f64;
    for (_, p) in distribution {
        acc += p.max(0.0);
        cumulative.push(acc);
    }
    let total = acc + residual.max(0.0);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let u: f64 = rng.gen_range(0.0..total);
        let pos = cumulative.partition_point(|&c| c <= u);
        if pos < distribution.len() {
            out.push(SampleOutcome::Pattern(distribution[pos].0.clone()));
        } else {
            out.push(SampleOutcome::Overflow);
        }
    }
    Ok(out)
}

/// Joint photon-number distribution of a two-mode squeezed vacuum with
/// per-mode intensity transmissivity `eta`, built in a truncated Fock
/// basis: the ideal state weights `|c_k|^2 = tanh(r)^{2k} / cosh(r)^2` on
/// `|k, k>` pass through the standard binomial loss map on each arm.
/// Number-basis coherences cannot reach the diagonal under loss, so the
/// joint distribution follows exactly from the diagonal weights.
pub fn fock_oracle_two_mode(r: f64, eta: f64, cutoff: u32) -> Result<DMatrix<f64>> {
    if cutoff > 25 {
        return Err(Error::ResourceLimit(format!(
            "cutoff {cutoff} exceeds the supported 25 photons per mode"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "transmissivity must lie in [0, 1], got {eta}"
        )));
    }
    let dim = cutoff as usize + 1;
    let mut joint = DMatrix::zeros(dim, dim);
    let th = r.tanh();
    let weight0 = 1.0 / (r.cosh() * r.cosh());

    let binom = |n: u32, k: u32| -> f64 {
        let mut b = 1.0f64;
        for i in 0..k {
            b = b * (n - i) as f64 / (i + 1) as f64;
        }
        b
    };

    for k in 0..=cutoff {
        let weight = weight0 * th.powi(2 * k as i32);
        for k1 in 0..=k {
            let b1 = binom(k, k1) * eta.powi(k1 as i32) * (1.0 - eta).powi((k - k1) as i32);
            for k2 in 0..=k {
                let b2 = binom(k, k2) * eta.powi(k2 as i32) * (1.0 - eta).powi((k - k2) as i32);
                joint[(k1 as usize, k2 as usize)] += weight * b1 * b2;
            }
        }
    }
    Ok(joint)
}
