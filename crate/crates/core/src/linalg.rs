//! Thin dense helpers over faer used across the crate.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{shape, HssError, Result};

pub type C64 = Complex64;
pub type CMat = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn from_real(m: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

pub fn from_rows(rows: &[&[C64]]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn real_from_rows(rows: &[&[f64]]) -> Mat<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn scaled(m: &CMat, k: C64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * k)
}

pub fn add(a: &CMat, b: &CMat) -> CMat {
    debug_assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    a + b
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    debug_assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    a - b
}

/// Matrix product with a dimension check that reports instead of panicking.
pub fn mul(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.ncols() != b.nrows() {
        return Err(shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 || b.ncols() == 0 || a.ncols() == 0 {
        return Ok(zeros(a.nrows(), b.ncols()));
    }
    Ok(a * b)
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(r, c);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        put(&mut out, r0, c0, b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

pub fn hstack(blocks: &[&CMat]) -> Result<CMat> {
    let r = blocks.first().map_or(0, |b| b.nrows());
    if blocks.iter().any(|b| b.nrows() != r) {
        return Err(shape("hstack: row counts differ"));
    }
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(r, c);
    let mut c0 = 0;
    for b in blocks {
        put(&mut out, 0, c0, b);
        c0 += b.ncols();
    }
    Ok(out)
}

pub fn vstack(blocks: &[&CMat]) -> Result<CMat> {
    let c = blocks.first().map_or(0, |b| b.ncols());
    if blocks.iter().any(|b| b.ncols() != c) {
        return Err(shape("vstack: column counts differ"));
    }
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(r, c);
    let mut r0 = 0;
    for b in blocks {
        put(&mut out, r0, 0, b);
        r0 += b.nrows();
    }
    Ok(out)
}

/// Writes `src` into `dst` with its top-left corner at (r0, c0).
pub fn put(dst: &mut CMat, r0: usize, c0: usize, src: &CMat) {
    if src.nrows() == 0 || src.ncols() == 0 {
        return;
    }
    dst.as_mut()
        .submatrix_mut(r0, c0, src.nrows(), src.ncols())
        .copy_from(src.as_ref());
}

pub fn block(m: &CMat, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
    if rows == 0 || cols == 0 {
        return zeros(rows, cols);
    }
    m.as_ref().submatrix(r0, c0, rows, cols).to_owned()
}

pub fn select_rows(m: &CMat, rows: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_cols(m: &CMat, cols: &[usize]) -> CMat {
    Mat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

pub fn frobenius(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn is_zero(m: &CMat) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)] == ZERO))
}

/// Bit-level equality, used by determinism checks.
pub fn bit_equal(a: &CMat, b: &CMat) -> bool {
    a.nrows() == b.nrows()
        && a.ncols() == b.ncols()
        && (0..a.ncols()).all(|j| {
            (0..a.nrows()).all(|i| {
                let (x, y) = (a[(i, j)], b[(i, j)]);
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
            })
        })
}

/// LU factorisation of a square matrix with a crude reciprocal condition
/// estimate taken from the pivots of U.
pub struct Lu {
    lu: faer::linalg::solvers::PartialPivLu<C64>,
    n: usize,
    pub rcond: f64,
}

impl Lu {
    pub fn new(m: &CMat) -> Result<Lu> {
        if m.nrows() != m.ncols() {
            return Err(shape(format!(
                "LU of non-square {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(Lu {
                lu: m.partial_piv_lu(),
                n,
                rcond: 1.0,
            });
        }
        let lu = m.partial_piv_lu();
        let u = lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let rcond = if hi == 0.0 || !lo.is_finite() {
            0.0
        } else {
            lo / hi
        };
        Ok(Lu { lu, n, rcond })
    }

    pub fn solve(&self, b: &CMat) -> Result<CMat> {
        if b.nrows() != self.n {
            return Err(shape(format!(
                "solve: right-hand side has {} rows, expected {}",
                b.nrows(),
                self.n
            )));
        }
        if self.n == 0 || b.ncols() == 0 {
            return Ok(zeros(b.nrows(), b.ncols()));
        }
        Ok(self.lu.solve(b))
    }
}

/// Solves `a x = b`; singular systems are reported as numerical errors.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let lu = Lu::new(a)?;
    if lu.rcond < 1e-15 {
        return Err(HssError::Numerical(format!(
            "linear system is numerically singular (pivot ratio {:e})",
            lu.rcond
        )));
    }
    lu.solve(b)
}

/// Inverse of a small square matrix, used for physical 3x3 blocks.
pub fn inverse(a: &CMat) -> Result<CMat> {
    solve(a, &identity(a.nrows()))
}

/// Kronecker product of `I_k` with `m`.
pub fn kron_identity(k: usize, m: &CMat) -> CMat {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = zeros(k * r, k * c);
    for b in 0..k {
        put(&mut out, b * r, b * c, m);
    }
    out
}

/// Product of two matrices given compatible partitions of rows of `x`, the
/// shared inner dimension and columns of `y`. Block pairs where either factor
/// is identically zero are skipped, which keeps assembled block-diagonal
/// systems cheap to multiply.
pub fn mul_partitioned(
    x: &CMat,
    y: &CMat,
    rows: &[usize],
    inner: &[usize],
    cols: &[usize],
) -> Result<CMat> {
    let sum = |p: &[usize]| p.iter().sum::<usize>();
    if x.ncols() != y.nrows() || sum(rows) != x.nrows() || sum(inner) != x.ncols() || sum(cols) != y.ncols() {
        return Err(shape("partitioned product: partitions do not match the operands"));
    }
    let starts = |p: &[usize]| {
        let mut s = Vec::with_capacity(p.len());
        let mut acc = 0;
        for v in p {
            s.push(acc);
            acc += v;
        }
        s
    };
    let (rs, ks, cs) = (starts(rows), starts(inner), starts(cols));
    let mut out = zeros(x.nrows(), y.ncols());
    let y_nonzero: Vec<Vec<bool>> = (0..inner.len())
        .map(|k| {
            (0..cols.len())
                .map(|c| !block_is_zero(y, ks[k], cs[c], inner[k], cols[c]))
                .collect()
        })
        .collect();
    for r in 0..rows.len() {
        if rows[r] == 0 {
            continue;
        }
        for k in 0..inner.len() {
            if inner[k] == 0 || block_is_zero(x, rs[r], ks[k], rows[r], inner[k]) {
                continue;
            }
            let xb = x.as_ref().submatrix(rs[r], ks[k], rows[r], inner[k]);
            for c in 0..cols.len() {
                if cols[c] == 0 || !y_nonzero[k][c] {
                    continue;
                }
                let yb = y.as_ref().submatrix(ks[k], cs[c], inner[k], cols[c]);
                let dst = out.as_mut().submatrix_mut(rs[r], cs[c], rows[r], cols[c]);
                faer::linalg::matmul::matmul(
                    dst,
                    faer::Accum::Add,
                    xb,
                    yb,
                    ONE,
                    faer::Par::Seq,
                );
            }
        }
    }
    Ok(out)
}

fn block_is_zero(m: &CMat, r0: usize, c0: usize, r: usize, c: usize) -> bool {
    (c0..c0 + c).all(|j| (r0..r0 + r).all(|i| m[(i, j)] == ZERO))
}

/// A 0/1 matrix with at most one unit entry per row, stored as the column
/// index picked by each row.
#[derive(Clone, Debug)]
pub struct Selection {
    pub picks: Vec<Option<usize>>,
    pub cols: usize,
}

impl Selection {
    pub fn detect(j: &CMat) -> Option<Selection> {
        let mut picks = vec![None; j.nrows()];
        for c in 0..j.ncols() {
            for r in 0..j.nrows() {
                let v = j[(r, c)];
                if v == ZERO {
                    continue;
                }
                if v != ONE || picks[r].is_some() {
                    return None;
                }
                picks[r] = Some(c);
            }
        }
        Some(Selection { picks, cols: j.ncols() })
    }

    /// J X
    pub fn apply_left(&self, x: &CMat) -> CMat {
        faer::Mat::from_fn(self.picks.len(), x.ncols(), |i, j| match self.picks[i] {
            Some(c) => x[(c, j)],
            None => ZERO,
        })
    }

    /// X J
    pub fn apply_right(&self, x: &CMat) -> CMat {
        let mut out = zeros(x.nrows(), self.cols);
        for (r, p) in self.picks.iter().enumerate() {
            if let Some(c) = p {
                for i in 0..x.nrows() {
                    out[(i, *c)] += x[(i, r)];
                }
            }
        }
        out
    }
}
