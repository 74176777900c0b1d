//! Adaptive-precision symplectic spectra.
//!
//! Covariance matrices of deep amplifier networks span an enormous dynamic
//! range: entries grow like `exp(c r d)` while the partial-transpose
//! symplectic eigenvalues that carry the entanglement shrink like
//! `exp(-c' r d)`. Once the ratio passes `1/eps_f64` no double-precision
//! eigensolver can resolve the small eigenvalues, so this module provides
//!
//! * a fast `f64` path with an explicit reliability test, and
//! * an exact fallback that rebuilds the covariance from its constituent
//!   layer matrices in software floating point and extracts the spectrum
//!   with a Cholesky factorization and a Jacobi eigensolver.
//!
//! The fallback chain is `sigma = L L^T`, `K = L^T Omega L` (antisymmetric,
//! spectrum `{+-i nu_k}`), and the eigenvalues of the symmetric embedding
//! `[[0, K], [K^T, 0]]`, which are `{+-nu_k}` with each `nu_k` appearing
//! four times. No squaring step is involved, so the working precision only
//! needs to cover `log2(||sigma|| / nu_min)` plus margin.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Smallest eigenvalue must clear the eigensolver's noise floor by this
/// factor for the f64 path to be trusted; it bounds the relative error of
/// the smallest eigenvalue by its reciprocal.
const F64_RESOLUTION_FACTOR: f64 = 1e8;
/// Same idea for the multiprecision path, in bits.
const MP_RESOLUTION_BITS: i64 = 34;
const MP_START_BITS: usize = 192;
const MP_MAX_BITS: usize = 4096;

/// A symplectic spectrum: each eigenvalue with its base-2 logarithm, sorted
/// ascending. The logarithm is carried separately so downstream code never
/// re-derives it from a value that may underflow f64.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    pub values: Vec<f64>,
    pub log2s: Vec<f64>,
}

impl Spectrum {
    pub fn into_f64(self) -> Vec<f64> {
        self.values
    }
}

/// One step of a Gaussian propagation, kept in parametric form so the
/// covariance can be rebuilt at any precision. The f64 matrix rides along
/// for the fast path; the extended path re-synthesizes entries from the
/// `(r, theta)` parameters so each rebuilt layer is symplectic to working
/// precision rather than to f64 rounding.
#[derive(Debug, Clone)]
pub(crate) enum PropagationStep {
    /// One amplifier layer: `sigma -> S sigma S^T`.
    OpaLayer {
        matrix: DMatrix<f64>,
        /// 0-based mode pairs and the matching `(r, theta)` per amplifier.
        pairs: Vec<(usize, usize)>,
        params: Vec<(f64, f64)>,
    },
    /// Per-mode amplitude transmittances `t_i`:
    /// `sigma_ij -> t_i t_j sigma_ij + (1 - t_i^2) delta_ij` (xxpp indexing).
    PerModeLoss(Vec<f64>),
}

/// Symplectic eigenvalues of the matrix `sigma` with form `omega`,
/// escalating to extended precision when f64 cannot resolve the spectrum
/// of the given entries.
pub(crate) fn symplectic_spectrum(sigma: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<Spectrum> {
    if let Some(spec) = f64_spectrum(sigma, omega)? {
        return Ok(spec);
    }
    let mut bits = mp_start_bits(sigma.norm().log2());
    loop {
        let ctx = MpCtx { p: bits };
        let st = MpMat::from_f64(sigma, &ctx);
        match mp_spectrum(&st, omega, &ctx) {
            Ok(Some(spec)) => return Ok(spec),
            Ok(None) | Err(Error::NumericalFailure(_)) if bits < MP_MAX_BITS => {
                bits = (bits * 3 / 2).div_ceil(64) * 64;
            }
            Ok(None) => {
                return Err(Error::NumericalFailure(
                    "symplectic spectrum did not converge at maximum precision".into(),
                ))
            }
            Err(e) => return Err(e),
        }
    }
}

/// Partial-transpose symplectic eigenvalues of the state produced by
/// `steps` acting on vacuum, with the momenta of `b_modes` sign-flipped.
/// Pass an empty `b_modes` for the plain spectrum. xxpp ordering.
pub(crate) fn pt_spectrum_from_steps(
    n: usize,
    steps: &[PropagationStep],
    b_modes: &[usize],
) -> Result<Spectrum> {
    let omega = crate::gaussian::symplectic_form(n, crate::gaussian::QuadratureOrdering::Xxpp);

    // fast path: fold in f64 and check whether the spectrum is resolvable
    let mut sigma = DMatrix::<f64>::identity(2 * n, 2 * n);
    let mut finite = true;
    for step in steps {
        match step {
            PropagationStep::OpaLayer { matrix, .. } => sigma = matrix * sigma * matrix.transpose(),
            PropagationStep::PerModeLoss(ts) => apply_loss_f64(&mut sigma, ts),
        }
        if !sigma.iter().all(|x| x.is_finite()) {
            finite = false;
            break;
        }
    }
    if finite {
        sigma = (&sigma + sigma.transpose()) * 0.5;
        flip_b_momenta(&mut sigma, n, b_modes);
        if let Some(spec) = f64_spectrum(&sigma, &omega)? {
            return Ok(spec);
        }
    }

    // norm estimate for the starting precision: product of step norms
    let mut log2_norm = 0.0f64;
    for step in steps {
        if let PropagationStep::OpaLayer { matrix, .. } = step {
            log2_norm += 2.0 * matrix.norm().log2().max(0.0);
        }
    }
    let mut bits = mp_start_bits(log2_norm);
    loop {
        let ctx = MpCtx { p: bits };
        let mut st = mp_fold_steps(n, steps, &ctx);
        mp_flip_b_momenta(&mut st, n, b_modes, &ctx);
        match mp_spectrum(&st, &omega, &ctx) {
            Ok(Some(spec)) => return Ok(spec),
            Ok(None) | Err(Error::NumericalFailure(_)) if bits < MP_MAX_BITS => {
                bits = (bits * 3 / 2).div_ceil(64) * 64;
            }
            Ok(None) => {
                return Err(Error::NumericalFailure(
                    "partial-transpose spectrum did not converge at maximum precision".into(),
                ))
            }
            Err(e) => return Err(e),
        }
    }
}

fn mp_start_bits(log2_norm: f64) -> usize {
    let extra = if log2_norm.is_finite() { log2_norm.max(0.0) as usize } else { 1024 };
    ((MP_START_BITS + 2 * extra).div_ceil(64) * 64).min(MP_MAX_BITS)
}

fn apply_loss_f64(sigma: &mut DMatrix<f64>, ts: &[f64]) {
    let n = ts.len();
    for i in 0..2 * n {
        for j in 0..2 * n {
            sigma[(i, j)] *= ts[i % n] * ts[j % n];
        }
    }
    for i in 0..2 * n {
        sigma[(i, i)] += 1.0 - ts[i % n] * ts[i % n];
    }
}

fn flip_b_momenta(sigma: &mut DMatrix<f64>, n: usize, b_modes: &[usize]) {
    for &m in b_modes {
        for j in 0..2 * n {
            sigma[(n + m, j)] = -sigma[(n + m, j)];
        }
        for i in 0..2 * n {
            sigma[(i, n + m)] = -sigma[(i, n + m)];
        }
    }
}

/// f64 attempt: eigenvalues of `Omega sigma` come in pairs `+-i nu_k`.
/// Returns `None` when the result cannot be trusted at this precision.
fn f64_spectrum(sigma: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<Option<Spectrum>> {
    let n = sigma.nrows() / 2;
    let m = omega * sigma;
    let eig = m.complex_eigenvalues();
    let scale = eig.iter().map(|z| z.norm()).fold(1.0f64, f64::max);

    // eigenvalues of i Omega sigma must be real: residue check
    for z in eig.iter() {
        if z.re.abs() > 1e-9 * scale {
            return Ok(None);
        }
    }
    let mut v: Vec<f64> = eig.iter().map(|z| z.im.abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // noise floor of the non-symmetric eigensolver
    let floor = f64::EPSILON * sigma.norm();
    if v[0] < F64_RESOLUTION_FACTOR * floor {
        return Ok(None);
    }
    // the spectrum must pair up
    for k in 0..n {
        let (a, b) = (v[2 * k], v[2 * k + 1]);
        if (b - a) > 1e-6 * (1.0 + b) {
            return Ok(None);
        }
    }
    let values: Vec<f64> = (0..n).map(|k| 0.5 * (v[2 * k] + v[2 * k + 1])).collect();
    let log2s = values.iter().map(|x| x.log2()).collect();
    Ok(Some(Spectrum { values, log2s }))
}

// ---------------------------------------------------------------------------
// software floating-point kernel
// ---------------------------------------------------------------------------

pub(crate) struct MpCtx {
    p: usize,
}

impl MpCtx {
    fn from_f64(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }
    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }
    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }
    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }
    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }
    fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.p, RM)
    }
}

fn to_f64(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = v.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *words.last().unwrap();
    let m = (top as f64) / (u64::MAX as f64 + 1.0);
    let s = if sign == Sign::Neg { -1.0 } else { 1.0 };
    s * m * (2f64).powi(exp)
}

/// Base-2 log of a positive value, safe across the whole exponent range.
fn log2_f64(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (words, _, _, exp, _) = v.as_raw_parts().unwrap();
    let top = *words.last().unwrap();
    let m = (top as f64) / (u64::MAX as f64 + 1.0); // in [0.5, 1)
    exp as f64 + m.log2()
}

/// Minimal dense matrix over software floats. Row-major.
pub(crate) struct MpMat {
    n: usize,
    d: Vec<BigFloat>,
}

impl MpMat {
    fn zeros(n: usize, ctx: &MpCtx) -> Self {
        Self { n, d: vec![ctx.from_f64(0.0); n * n] }
    }

    fn identity(n: usize, ctx: &MpCtx) -> Self {
        let mut m = Self::zeros(n, ctx);
        for i in 0..n {
            m.d[i * n + i] = ctx.from_f64(1.0);
        }
        m
    }

    fn from_f64(src: &DMatrix<f64>, ctx: &MpCtx) -> Self {
        let n = src.nrows();
        let mut m = Self::zeros(n, ctx);
        for i in 0..n {
            for j in 0..n {
                m.d[i * n + j] = ctx.from_f64(src[(i, j)]);
            }
        }
        m
    }

    fn at(&self, i: usize, j: usize) -> &BigFloat {
        &self.d[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: BigFloat) {
        self.d[i * self.n + j] = v;
    }

    fn matmul(&self, rhs: &MpMat, ctx: &MpCtx) -> MpMat {
        let n = self.n;
        let mut out = MpMat::zeros(n, ctx);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ctx.from_f64(0.0);
                for k in 0..n {
                    acc = ctx.add(&acc, &ctx.mul(self.at(i, k), rhs.at(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    fn transpose(&self, ctx: &MpCtx) -> MpMat {
        let n = self.n;
        let mut out = MpMat::zeros(n, ctx);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.at(j, i).clone());
            }
        }
        out
    }

    /// Exponent of the Frobenius norm (base-2 order of magnitude).
    fn fro_exponent(&self, ctx: &MpCtx) -> i64 {
        let mut acc = ctx.from_f64(0.0);
        for v in &self.d {
            acc = ctx.add(&acc, &ctx.mul(v, v));
        }
        if acc.is_zero() {
            return i64::MIN / 2;
        }
        (acc.exponent().unwrap_or(0) as i64) / 2
    }
}

/// Amplifier layer rebuilt at working precision: cosh/sinh/cos/sin of the
/// exactly-representable f64 parameters, so the layer satisfies the
/// symplectic identity to `2^-p` rather than to f64 rounding.
fn mp_opa_layer(
    n: usize,
    pairs: &[(usize, usize)],
    params: &[(f64, f64)],
    ctx: &MpCtx,
    cc: &mut Consts,
) -> MpMat {
    let mut m = MpMat::zeros(2 * n, ctx);
    let one = ctx.from_f64(1.0);
    let half = ctx.from_f64(0.5);
    let mut used = vec![false; n];
    for (&(a, b), &(r, theta)) in pairs.iter().zip(params.iter()) {
        let er = ctx.from_f64(r).exp(ctx.p, RM, cc);
        let inv = ctx.div(&one, &er);
        let c = ctx.mul(&half, &ctx.add(&er, &inv));
        let s = ctx.mul(&half, &ctx.sub(&er, &inv));
        let th = ctx.from_f64(theta);
        let ct = th.cos(ctx.p, RM, cc);
        let st = th.sin(ctx.p, RM, cc);
        let a_off = ctx.mul(&ct, &s).neg();
        let b_off = ctx.mul(&st, &s).neg();
        let c_off = ctx.mul(&ct, &s);
        let modes = [a, b];
        for (ii, &i) in modes.iter().enumerate() {
            for (jj, &j) in modes.iter().enumerate() {
                let (av, bv, cv) = if ii == jj {
                    (c.clone(), ctx.from_f64(0.0), c.clone())
                } else {
                    (a_off.clone(), b_off.clone(), c_off.clone())
                };
                m.set(i, j, av);
                m.set(i, n + j, bv.clone());
                m.set(n + i, j, bv);
                m.set(n + i, n + j, cv);
            }
        }
        used[a] = true;
        used[b] = true;
    }
    for i in 0..n {
        if !used[i] {
            m.set(i, i, one.clone());
            m.set(n + i, n + i, one.clone());
        }
    }
    m
}

fn mp_fold_steps(n: usize, steps: &[PropagationStep], ctx: &MpCtx) -> MpMat {
    let mut cc = Consts::new().expect("constants cache");
    let mut sigma = MpMat::identity(2 * n, ctx);
    for step in steps {
        match step {
            PropagationStep::OpaLayer { pairs, params, .. } => {
                let sm = mp_opa_layer(n, pairs, params, ctx, &mut cc);
                let tmp = sm.matmul(&sigma, ctx);
                sigma = tmp.matmul(&sm.transpose(ctx), ctx);
            }
            PropagationStep::PerModeLoss(ts) => {
                let t: Vec<BigFloat> = ts.iter().map(|&x| ctx.from_f64(x)).collect();
                let one = ctx.from_f64(1.0);
                for i in 0..2 * n {
                    for j in 0..2 * n {
                        let f = ctx.mul(&t[i % n], &t[j % n]);
                        let v = ctx.mul(sigma.at(i, j), &f);
                        sigma.set(i, j, v);
                    }
                }
                for i in 0..2 * n {
                    let tt = ctx.mul(&t[i % n], &t[i % n]);
                    let add = ctx.sub(&one, &tt);
                    let v = ctx.add(sigma.at(i, i), &add);
                    sigma.set(i, i, v);
                }
            }
        }
    }
    sigma
}

fn mp_flip_b_momenta(sigma: &mut MpMat, n: usize, b_modes: &[usize], _ctx: &MpCtx) {
    for &m in b_modes {
        for j in 0..2 * n {
            let v = sigma.at(n + m, j).neg();
            sigma.set(n + m, j, v);
            let v = sigma.at(j, n + m).neg();
            sigma.set(j, n + m, v);
        }
    }
}

/// Cholesky factor (lower). Fails when a pivot is non-positive, which at
/// adequate precision means the matrix is not positive definite.
fn mp_cholesky(a: &MpMat, ctx: &MpCtx) -> Result<MpMat> {
    let n = a.n;
    let mut l = MpMat::zeros(n, ctx);
    for j in 0..n {
        let mut d = a.at(j, j).clone();
        for k in 0..j {
            d = ctx.sub(&d, &ctx.mul(l.at(j, k), l.at(j, k)));
        }
        if d.is_negative() || d.is_zero() {
            return Err(Error::NumericalFailure(
                "matrix not positive definite at current precision".into(),
            ));
        }
        let ljj = ctx.sqrt(&d);
        for i in (j + 1)..n {
            let mut s = a.at(i, j).clone();
            for k in 0..j {
                s = ctx.sub(&s, &ctx.mul(l.at(i, k), l.at(j, k)));
            }
            l.set(i, j, ctx.div(&s, &ljj));
        }
        l.set(j, j, ljj);
    }
    Ok(l)
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix. Eigenvalues only.
fn mp_jacobi_eigenvalues(a: &MpMat, ctx: &MpCtx) -> Result<Vec<BigFloat>> {
    let n = a.n;
    let mut m = MpMat { n, d: a.d.clone() };
    let one = ctx.from_f64(1.0);
    let half = ctx.from_f64(0.5);
    let fro_exp = m.fro_exponent(ctx);
    // rotations stop mattering once the off-diagonal mass is at the
    // representable floor relative to the matrix norm
    let stop_exp = fro_exp - (ctx.p as i64 - 6);

    for _sweep in 0..60 {
        let mut off_exp = i64::MIN / 2;
        for p in 0..n {
            for q in (p + 1)..n {
                if let Some(e) = m.at(p, q).exponent() {
                    if !m.at(p, q).is_zero() {
                        off_exp = off_exp.max(e as i64);
                    }
                }
            }
        }
        if off_exp <= stop_exp {
            return Ok((0..n).map(|i| m.at(i, i).clone()).collect());
        }
        // rotate only entries near the current off-diagonal scale; small
        // ones get their turn in later sweeps
        let gate = off_exp - (ctx.p as i64);
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.at(p, q).clone();
                if apq.is_zero() || (apq.exponent().unwrap_or(i32::MIN) as i64) < gate {
                    continue;
                }
                let app = m.at(p, p).clone();
                let aqq = m.at(q, q).clone();
                let num = ctx.sub(&aqq, &app);
                let theta = ctx.mul(&half, &ctx.div(&num, &apq));
                // t = sign(theta) / (|theta| + sqrt(theta^2 + 1))
                let t = {
                    let at = theta.abs();
                    let root = ctx.sqrt(&ctx.add(&ctx.mul(&at, &at), &one));
                    let den = ctx.add(&at, &root);
                    let mag = ctx.div(&one, &den);
                    if theta.is_negative() {
                        mag.neg()
                    } else {
                        mag
                    }
                };
                let c = ctx.div(&one, &ctx.sqrt(&ctx.add(&ctx.mul(&t, &t), &one)));
                let s = ctx.mul(&t, &c);

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m.at(k, p).clone();
                    let akq = m.at(k, q).clone();
                    let new_kp = ctx.sub(&ctx.mul(&c, &akp), &ctx.mul(&s, &akq));
                    let new_kq = ctx.add(&ctx.mul(&s, &akp), &ctx.mul(&c, &akq));
                    m.set(k, p, new_kp.clone());
                    m.set(p, k, new_kp);
                    m.set(k, q, new_kq.clone());
                    m.set(q, k, new_kq);
                }
                let tapq = ctx.mul(&t, &apq);
                m.set(p, p, ctx.sub(&app, &tapq));
                m.set(q, q, ctx.add(&aqq, &tapq));
                m.set(p, q, ctx.from_f64(0.0));
                m.set(q, p, ctx.from_f64(0.0));
            }
        }
    }
    Err(Error::NumericalFailure("Jacobi eigensolver did not converge".into()))
}

/// Full multiprecision spectrum. Returns `Ok(None)` when the smallest
/// eigenvalue sits too close to this precision's noise floor.
fn mp_spectrum(sigma: &MpMat, omega: &DMatrix<f64>, ctx: &MpCtx) -> Result<Option<Spectrum>> {
    let dim = sigma.n;
    let n = dim / 2;
    let l = mp_cholesky(sigma, ctx)?;
    let om = MpMat::from_f64(omega, ctx);
    let k = l.transpose(ctx).matmul(&om, ctx).matmul(&l, ctx);

    // symmetric embedding [[0, K], [K^T, 0]]: eigenvalues come out as
    // {+-nu} with every nu four-fold
    let mut j = MpMat::zeros(2 * dim, ctx);
    for r in 0..dim {
        for c in 0..dim {
            j.set(r, dim + c, k.at(r, c).clone());
            j.set(dim + r, c, k.at(c, r).clone());
        }
    }
    let floor_exp = j.fro_exponent(ctx) - (ctx.p as i64 - 8);
    let eig = mp_jacobi_eigenvalues(&j, ctx)?;

    let mut vals: Vec<BigFloat> = eig.into_iter().map(|v| v.abs()).collect();
    vals.sort_by(|a, b| a.cmp(b).map(|o| o.cmp(&0)).unwrap_or(std::cmp::Ordering::Equal));
    // resolution check on the smallest eigenvalue
    let min_exp = if vals[0].is_zero() { i64::MIN / 2 } else { vals[0].exponent().unwrap_or(0) as i64 };
    if min_exp < floor_exp + MP_RESOLUTION_BITS {
        return Ok(None);
    }

    let mut values = Vec::with_capacity(n);
    let mut log2s = Vec::with_capacity(n);
    for g in 0..n {
        // average the four copies
        let mut acc = ctx.from_f64(0.0);
        for t in 0..4 {
            acc = ctx.add(&acc, &vals[4 * g + t]);
        }
        let v = ctx.mul(&acc, &ctx.from_f64(0.25));
        values.push(to_f64(&v));
        log2s.push(log2_f64(&v));
    }
    Ok(Some(Spectrum { values, log2s }))
}
