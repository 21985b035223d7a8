use std::collections::BTreeMap;

use crate::error::{shape, Result};
use crate::linalg::{self, CMat, C64, ZERO};

/// Matrix-valued Fourier series: order h maps to an m x n coefficient.
/// Orders without an entry are zero.
#[derive(Clone, Debug)]
pub struct FourierSeries {
    rows: usize,
    cols: usize,
    coeffs: BTreeMap<i64, CMat>,
}

impl FourierSeries {
    /// The zero series of the given shape.
    pub fn zero(rows: usize, cols: usize) -> Self {
        FourierSeries {
            rows,
            cols,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(m: CMat) -> Self {
        let mut s = FourierSeries::zero(m.nrows(), m.ncols());
        s.coeffs.insert(0, m);
        s
    }

    pub fn constant_real(m: &faer::Mat<f64>) -> Self {
        FourierSeries::constant(linalg::from_real(m.as_ref()))
    }

    pub fn identity(n: usize) -> Self {
        FourierSeries::constant(linalg::identity(n))
    }

    /// Builds a series from (order, coefficient) pairs. All coefficients must
    /// share one shape; a later entry for the same order replaces the earlier.
    pub fn from_coefficients<I>(rows: usize, cols: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, CMat)>,
    {
        let mut s = FourierSeries::zero(rows, cols);
        for (h, m) in items {
            s.insert(h, m)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, h: i64, m: CMat) -> Result<()> {
        if m.nrows() != self.rows || m.ncols() != self.cols {
            return Err(shape(format!(
                "coefficient at order {h} is {}x{}, series is {}x{}",
                m.nrows(),
                m.ncols(),
                self.rows,
                self.cols
            )));
        }
        self.coeffs.insert(h, m);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Largest |h| with a stored coefficient (0 for the zero series).
    pub fn order(&self) -> usize {
        self.coeffs
            .keys()
            .map(|h| h.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn coefficient(&self, h: i64) -> Option<&CMat> {
        self.coeffs.get(&h)
    }

    pub fn coefficient_or_zero(&self, h: i64) -> CMat {
        self.coeffs
            .get(&h)
            .cloned()
            .unwrap_or_else(|| linalg::zeros(self.rows, self.cols))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &CMat)> {
        self.coeffs.iter().map(|(h, m)| (*h, m))
    }

    /// Orders with a stored coefficient that is not identically zero.
    pub fn support(&self) -> Vec<i64> {
        self.coeffs
            .iter()
            .filter(|(_, m)| !linalg::is_zero(m))
            .map(|(h, _)| *h)
            .collect()
    }

    pub fn is_dc_only(&self) -> bool {
        self.support().iter().all(|h| *h == 0)
    }

    /// Drops every coefficient with |h| > hmax.
    pub fn truncated(&self, hmax: usize) -> Self {
        FourierSeries {
            rows: self.rows,
            cols: self.cols,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(h, _)| h.unsigned_abs() as usize <= hmax)
                .map(|(h, m)| (*h, m.clone()))
                .collect(),
        }
    }

    /// alpha * a + beta * b, order by order.
    pub fn linear_combination(alpha: C64, a: &Self, beta: C64, b: &Self) -> Result<Self> {
        if a.rows != b.rows || a.cols != b.cols {
            return Err(shape("linear combination of series with different shapes"));
        }
        let mut out = FourierSeries::zero(a.rows, a.cols);
        let orders: std::collections::BTreeSet<i64> =
            a.coeffs.keys().chain(b.coeffs.keys()).copied().collect();
        for h in orders {
            let m = match (a.coeffs.get(&h), b.coeffs.get(&h)) {
                (Some(x), Some(y)) => &linalg::scaled(x, alpha) + &linalg::scaled(y, beta),
                (Some(x), None) => linalg::scaled(x, alpha),
                (None, Some(y)) => linalg::scaled(y, beta),
                (None, None) => unreachable!(),
            };
            out.coeffs.insert(h, m);
        }
        Ok(out)
    }

    /// Series of the pointwise product a(t) * b(t).
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(shape(format!(
                "series product {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out: BTreeMap<i64, CMat> = BTreeMap::new();
        for (ha, a) in &self.coeffs {
            for (hb, b) in &other.coeffs {
                let p = linalg::mul(a, b)?;
                let e = out
                    .entry(ha + hb)
                    .or_insert_with(|| linalg::zeros(self.rows, other.cols));
                *e = &*e + &p;
            }
        }
        Ok(FourierSeries {
            rows: self.rows,
            cols: other.cols,
            coeffs: out,
        })
    }

    /// True when A_{-h} = conj(A_h) entrywise within `tol`, i.e. the series
    /// describes a real time-domain matrix.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let orders: std::collections::BTreeSet<i64> = self
            .coeffs
            .keys()
            .flat_map(|h| [*h, -*h])
            .collect();
        orders.into_iter().all(|h| {
            let a = self.coefficient_or_zero(h);
            let b = self.coefficient_or_zero(-h);
            (0..self.rows).all(|i| (0..self.cols).all(|j| (a[(i, j)] - b[(i, j)].conj()).norm() <= tol))
        })
    }

    /// Time-domain value at t for fundamental f1.
    pub fn evaluate(&self, t: f64, f1: f64) -> CMat {
        let mut out = linalg::zeros(self.rows, self.cols);
        let w = 2.0 * std::f64::consts::PI * f1;
        for (h, m) in &self.coeffs {
            let e = C64::from_polar(1.0, w * (*h as f64) * t);
            for j in 0..self.cols {
                for i in 0..self.rows {
                    out[(i, j)] += m[(i, j)] * e;
                }
            }
        }
        out
    }

    /// Exact structural equality (same stored orders, bit-equal entries).
    pub fn bit_equal(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.coeffs.len() == other.coeffs.len()
            && self
                .coeffs
                .iter()
                .zip(other.coeffs.iter())
                .all(|((ha, a), (hb, b))| ha == hb && linalg::bit_equal(a, b))
    }

    /// Block-diagonal combination of two series (used when stacking blocks).
    pub fn block_diag(parts: &[&FourierSeries]) -> Self {
        let rows = parts.iter().map(|p| p.rows).sum();
        let cols = parts.iter().map(|p| p.cols).sum();
        let orders: std::collections::BTreeSet<i64> = parts
            .iter()
            .flat_map(|p| p.coeffs.keys().copied())
            .collect();
        let mut out = FourierSeries::zero(rows, cols);
        for h in orders {
            let blocks: Vec<CMat> = parts.iter().map(|p| p.coefficient_or_zero(h)).collect();
            let refs: Vec<&CMat> = blocks.iter().collect();
            out.coeffs.insert(h, linalg::block_diag(&refs));
        }
        out
    }

    /// Selects rows and columns of every coefficient.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        FourierSeries {
            rows: rows.len(),
            cols: cols.len(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(h, m)| {
                    (
                        *h,
                        faer::Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]),
                    )
                })
                .collect(),
        }
    }

    pub fn entry(&self, h: i64, i: usize, j: usize) -> C64 {
        self.coeffs.get(&h).map_or(ZERO, |m| m[(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn scalar(v: f64) -> CMat {
        faer::Mat::from_fn(1, 1, |_, _| C64::new(v, 0.0))
    }

    #[test]
    fn rejects_mixed_shapes() {
        let r = FourierSeries::from_coefficients(1, 1, [(0, scalar(1.0)), (1, linalg::zeros(2, 1))]);
        assert!(r.is_err());
    }

    #[test]
    fn truncation_drops_high_orders() {
        let s = FourierSeries::from_coefficients(1, 1, [(-3, scalar(1.0)), (0, scalar(2.0)), (2, scalar(3.0))])
            .unwrap();
        let t = s.truncated(2);
        assert_eq!(t.order(), 2);
        assert!(t.coefficient(-3).is_none());
    }

    #[test]
    fn product_of_cosines() {
        // (2 cos wt)^2 = 2 + 2 cos 2wt
        let c = FourierSeries::from_coefficients(1, 1, [(-1, scalar(1.0)), (1, scalar(1.0))]).unwrap();
        let p = c.product(&c).unwrap();
        assert_eq!(p.entry(0, 0, 0), C64::new(2.0, 0.0));
        assert_eq!(p.entry(2, 0, 0), ONE);
        assert_eq!(p.entry(-2, 0, 0), ONE);
    }

    #[test]
    fn evaluation_matches_closed_form() {
        let c = FourierSeries::from_coefficients(1, 1, [(-1, scalar(1.0)), (1, scalar(1.0))]).unwrap();
        let t = 0.0013;
        let v = c.evaluate(t, 50.0)[(0, 0)];
        let expect = 2.0 * (2.0 * std::f64::consts::PI * 50.0 * t).cos();
        assert!((v.re - expect).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn conjugate_symmetry_detection() {
        let mut s = FourierSeries::zero(1, 1);
        s.insert(1, faer::Mat::from_fn(1, 1, |_, _| C64::new(0.0, 0.5))).unwrap();
        assert!(!s.is_conjugate_symmetric(1e-12));
        s.insert(-1, faer::Mat::from_fn(1, 1, |_, _| C64::new(0.0, -0.5))).unwrap();
        assert!(s.is_conjugate_symmetric(1e-12));
    }
}
