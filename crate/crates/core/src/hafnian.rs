//! Hafnians of symmetric matrices.
//!
//! Two routes are kept deliberately independent: a brute-force sum over
//! perfect matchings (ground truth, exponential in pairs) and a
//! subset-inclusion-exclusion algorithm whose per-subset work is power
//! traces of a pair-swapped submatrix, `O(n^3 2^(n/2))` overall. They are
//! cross-checked against each other in the test suite; production code
//! calls the fast one.

use nalgebra::{ComplexField, DMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Brute force is a sum over `(dim-1)!!` matchings.
pub const BRUTEFORCE_MAX_DIM: usize = 12;
/// The fast algorithm enumerates `2^(dim/2)` subsets.
pub const FAST_MAX_DIM: usize = 40;

const SYMMETRY_REL_TOL: f64 = 1e-12;
/// Subsets per parallel work unit; block boundaries are fixed so the
/// reduction order never depends on the thread count.
const BLOCK: u64 = 4096;

fn validate<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, cap: usize) -> Result<usize> {
    let dim = m.nrows();
    if dim != m.ncols() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if dim % 2 != 0 {
        return Err(Error::InvalidArgument(
            "hafnian of an odd-dimension matrix is zero by convention; only even dimensions are accepted".into(),
        ));
    }
    if dim > cap {
        return Err(Error::ResourceLimit(format!(
            "dimension {dim} exceeds the cap of {cap}"
        )));
    }
    let scale = m.iter().map(|z| z.clone().modulus()).fold(1.0f64, f64::max);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let asym = (m[(i, j)].clone() - m[(j, i)].clone()).modulus();
            if asym > SYMMETRY_REL_TOL * scale {
                return Err(Error::InvalidArgument(format!(
                    "matrix must be symmetric (asymmetry {asym:.3e} at ({i},{j}))"
                )));
            }
        }
    }
    Ok(dim)
}

/// Hafnian as the literal sum over all perfect matchings. Exact up to
/// floating-point rounding; the oracle the fast route is tested against.
pub fn hafnian_bruteforce<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<T> {
    let dim = validate(m, BRUTEFORCE_MAX_DIM)?;
    if dim == 0 {
        return Ok(T::one());
    }
    let idx: Vec<usize> = (0..dim).collect();
    Ok(match_rec(m, &idx))
}

fn match_rec<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, rem: &[usize]) -> T {
    if rem.is_empty() {
        return T::one();
    }
    let i = rem[0];
    let mut total = T::zero();
    for jj in 1..rem.len() {
        let j = rem[jj];
        let mut rest = Vec::with_capacity(rem.len() - 2);
        rest.extend_from_slice(&rem[1..jj]);
        rest.extend_from_slice(&rem[jj + 1..]);
        total += m[(i, j)].clone() * match_rec(m, &rest);
    }
    total
}

#[derive(Clone)]
struct Kahan<T> {
    sum: T,
    carry: T,
}

impl<T: ComplexField> Kahan<T> {
    fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }

    fn add(&mut self, v: T) {
        let y = v - self.carry.clone();
        let t = self.sum.clone() + y.clone();
        self.carry = (t.clone() - self.sum.clone()) - y;
        self.sum = t;
    }
}

/// Power-trace hafnian. Supports complex entries; equals the brute-force
/// sum within 1e-9 relative on the sizes where both run.
pub fn hafnian_fast<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<T> {
    let dim = validate(m, FAST_MAX_DIM)?;
    if dim == 0 {
        return Ok(T::one());
    }
    let pairs = dim / 2;
    let a: Vec<T> = (0..dim * dim)
        .map(|k| m[(k / dim, k % dim)].clone())
        .collect();

    let nmasks: u64 = 1u64 << pairs;
    let nblocks = nmasks.div_ceil(BLOCK);
    let block_sums: Vec<T> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Kahan::new();
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(nmasks);
            let mut ws = Workspace::new(dim, pairs);
            for mask in lo..hi {
                acc.add(subset_term(&a, dim, pairs, mask, &mut ws));
            }
            acc.sum
        })
        .collect();

    let mut total = Kahan::new();
    for s in block_sums {
        total.add(s);
    }
    Ok(total.sum)
}

struct Workspace<T> {
    sel: Vec<usize>,
    b: Vec<T>,
    cur: Vec<T>,
    nxt: Vec<T>,
    ptr: Vec<T>,
    fcoef: Vec<T>,
    gcoef: Vec<T>,
}

impl<T: ComplexField<RealField = f64>> Workspace<T> {
    fn new(dim: usize, pairs: usize) -> Self {
        Self {
            sel: Vec::with_capacity(dim),
            b: vec![T::zero(); dim * dim],
            cur: vec![T::zero(); dim * dim],
            nxt: vec![T::zero(); dim * dim],
            ptr: vec![T::zero(); pairs + 1],
            fcoef: vec![T::zero(); pairs + 1],
            gcoef: vec![T::zero(); pairs + 1],
        }
    }
}

/// One inclusion-exclusion term: `(-1)^(pairs - |S|) [x^pairs] exp(sum_k
/// tr(B_S^k) x^k / (2k))` where `B_S` is the subset submatrix with rows
/// swapped inside each pair.
fn subset_term<T: ComplexField<RealField = f64>>(
    a: &[T],
    dim: usize,
    pairs: usize,
    mask: u64,
    ws: &mut Workspace<T>,
) -> T {
    let s = mask.count_ones() as usize;
    let sign_neg = (pairs - s) % 2 == 1;
    if s == 0 {
        // empty subset contributes only to the zero-pair hafnian
        return if pairs == 0 { T::one() } else { T::zero() };
    }

    ws.sel.clear();
    for p in 0..pairs {
        if mask >> p & 1 == 1 {
            ws.sel.push(2 * p);
            ws.sel.push(2 * p + 1);
        }
    }
    let k = 2 * s;

    // B = (pair-swap) * A_S: row 2i takes the submatrix row of index 2i+1
    // and vice versa
    for ri in 0..k {
        let swapped_row = if ri % 2 == 0 { ws.sel[ri + 1] } else { ws.sel[ri - 1] };
        for (ci, &col_sel) in ws.sel.iter().enumerate() {
            ws.b[ri * k + ci] = a[swapped_row * dim + col_sel].clone();
        }
    }

    // power traces tr(B^j), j = 1..pairs
    for ptr in ws.ptr.iter_mut() {
        *ptr = T::zero();
    }
    ws.cur[..k * k].clone_from_slice(&ws.b[..k * k]);
    let mut tr = T::zero();
    for i in 0..k {
        tr += ws.cur[i * k + i].clone();
    }
    ws.ptr[1] = tr;
    for j in 2..=pairs {
        // nxt = cur * b
        for r in 0..k {
            for c in 0..k {
                let mut acc = T::zero();
                for t in 0..k {
                    acc += ws.cur[r * k + t].clone() * ws.b[t * k + c].clone();
                }
                ws.nxt[r * k + c] = acc;
            }
        }
        std::mem::swap(&mut ws.cur, &mut ws.nxt);
        let mut tr = T::zero();
        for i in 0..k {
            tr += ws.cur[i * k + i].clone();
        }
        ws.ptr[j] = tr;
    }

    // g = exp(f) truncated at x^pairs, with f_j = tr(B^j) / (2j)
    for j in 1..=pairs {
        ws.fcoef[j] = ws.ptr[j].clone() * T::from_real(0.5 / j as f64);
    }
    ws.gcoef[0] = T::one();
    for j in 1..=pairs {
        let mut acc = T::zero();
        for i in 1..=j {
            acc += ws.fcoef[i].clone() * T::from_real(i as f64) * ws.gcoef[j - i].clone();
        }
        ws.gcoef[j] = acc * T::from_real(1.0 / j as f64);
    }

    if sign_neg {
        -ws.gcoef[pairs].clone()
    } else {
        ws.gcoef[pairs].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_symmetric(dim: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        (&m + m.transpose()) * 0.5
    }

    #[test]
    fn empty_matrix_hafnian_is_one() {
        let m = DMatrix::<f64>::zeros(0, 0);
        assert_eq!(hafnian_bruteforce(&m).unwrap(), 1.0);
        assert_eq!(hafnian_fast(&m).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_is_off_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 3.5, 3.5, 0.0]);
        assert_eq!(hafnian_bruteforce(&m).unwrap(), 3.5);
        assert!((hafnian_fast(&m).unwrap() - 3.5).abs() < 1e-14);
    }

    #[test]
    fn four_by_four_three_matchings() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let m = random_symmetric(4, &mut rng);
        let expect = m[(0, 1)] * m[(2, 3)] + m[(0, 2)] * m[(1, 3)] + m[(0, 3)] * m[(1, 2)];
        assert!((hafnian_bruteforce(&m).unwrap() - expect).abs() < 1e-14);
        assert!((hafnian_fast(&m).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn all_ones_counts_matchings() {
        // 8 elements have 7!! = 105 perfect matchings
        let m = DMatrix::from_element(8, 8, 1.0);
        assert!((hafnian_bruteforce(&m).unwrap() - 105.0).abs() < 1e-9);
        assert!((hafnian_fast(&m).unwrap() - 105.0).abs() < 1e-9);
    }

    #[test]
    fn fast_matches_bruteforce_dim10() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let m = random_symmetric(10, &mut rng);
        let hb = hafnian_bruteforce(&m).unwrap();
        let hf = hafnian_fast(&m).unwrap();
        assert!((hb - hf).abs() <= 1e-10 * hb.abs().max(1.0));
    }

    #[test]
    fn complex_entries_match_bruteforce() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for dim in [4usize, 8] {
            let m = DMatrix::from_fn(dim, dim, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let m = (m.clone() + m.transpose()) * C64::new(0.5, 0.0);
            let hb = hafnian_bruteforce(&m).unwrap();
            let hf = hafnian_fast(&m).unwrap();
            assert!((hb - hf).norm() <= 1e-10 * hb.norm().max(1.0), "dim {dim}");
        }
    }

    #[test]
    fn scaling_one_index_scales_hafnian() {
        // each matching uses index i exactly once
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let m = random_symmetric(8, &mut rng);
        let base = hafnian_fast(&m).unwrap();
        let c = 2.75;
        let mut scaled = m.clone();
        for j in 0..8 {
            scaled[(2, j)] *= c;
            scaled[(j, 2)] *= c;
        }
        scaled[(2, 2)] /= c; // row+column scaling hits the diagonal twice
        let got = hafnian_fast(&scaled).unwrap();
        assert!((got - c * base).abs() < 1e-9 * (c * base).abs().max(1.0));
    }

    #[test]
    fn odd_dimension_rejected() {
        let m = DMatrix::<f64>::zeros(3, 3);
        assert!(matches!(hafnian_bruteforce(&m), Err(Error::InvalidArgument(_))));
        assert!(matches!(hafnian_fast(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(hafnian_fast(&m).is_err());
    }

    #[test]
    fn caps_enforced() {
        let m = DMatrix::<f64>::zeros(14, 14);
        assert!(matches!(hafnian_bruteforce(&m), Err(Error::ResourceLimit(_))));
        let m = DMatrix::<f64>::zeros(42, 42);
        assert!(matches!(hafnian_fast(&m), Err(Error::ResourceLimit(_))));
    }
}
