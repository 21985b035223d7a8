use super::{FourierSeries, HarmonicIndexSet, HarmonicSignal};
use crate::error::{config, shape, Result};
use crate::linalg::{self, CMat};

/// Block-Toeplitz lift of a matrix-valued Fourier series: block (i, k) is the
/// coefficient of order i - k.
#[derive(Clone, Debug)]
pub struct ToeplitzOperator {
    index_set: HarmonicIndexSet,
    block_rows: usize,
    block_cols: usize,
    matrix: CMat,
    series: Option<FourierSeries>,
}

/// Lifts `series` onto `index_set`. The series must already be truncated to
/// the index set's hmax.
pub fn toeplitz_from_fourier(series: &FourierSeries, index_set: HarmonicIndexSet) -> Result<ToeplitzOperator> {
    let hc = series.order();
    if hc > index_set.hmax() {
        return Err(config(format!(
            "series of order {hc} exceeds hmax = {}; truncate it first",
            index_set.hmax()
        )));
    }
    let (m, n) = (series.rows(), series.cols());
    let k = index_set.len();
    let mut matrix = linalg::zeros(k * m, k * n);
    for (h, coeff) in series.iter() {
        for col in 0..k {
            let row = col as i64 + h;
            if row < 0 || row >= k as i64 {
                continue;
            }
            linalg::put(&mut matrix, row as usize * m, col * n, coeff);
        }
    }
    Ok(ToeplitzOperator {
        index_set,
        block_rows: m,
        block_cols: n,
        matrix,
        series: Some(series.clone()),
    })
}

impl ToeplitzOperator {
    /// Wraps an already assembled matrix that has no generating series.
    pub fn from_matrix(index_set: HarmonicIndexSet, block_rows: usize, block_cols: usize, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != index_set.len() * block_rows || matrix.ncols() != index_set.len() * block_cols {
            return Err(shape(format!(
                "matrix {}x{} does not fit {} orders of {}x{} blocks",
                matrix.nrows(),
                matrix.ncols(),
                index_set.len(),
                block_rows,
                block_cols
            )));
        }
        Ok(ToeplitzOperator {
            index_set,
            block_rows,
            block_cols,
            matrix,
            series: None,
        })
    }

    pub fn identity(index_set: HarmonicIndexSet, n: usize) -> Self {
        toeplitz_from_fourier(&FourierSeries::identity(n), index_set).expect("DC series always fits")
    }

    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn series(&self) -> Option<&FourierSeries> {
        self.series.as_ref()
    }

    /// Block at block-row i, block-column k.
    pub fn block(&self, i: usize, k: usize) -> CMat {
        linalg::block(
            &self.matrix,
            i * self.block_rows,
            k * self.block_cols,
            self.block_rows,
            self.block_cols,
        )
    }

    pub fn apply(&self, x: &HarmonicSignal) -> Result<HarmonicSignal> {
        if !x.index_set().same_as(&self.index_set) || x.channels() != self.block_cols {
            return Err(shape(format!(
                "operator with {} input channels at hmax {} applied to a {}-channel signal at hmax {}",
                self.block_cols,
                self.index_set.hmax(),
                x.channels(),
                x.index_set().hmax()
            )));
        }
        let y = linalg::mul(&self.matrix, &x.to_column())?;
        HarmonicSignal::from_column(self.index_set, self.block_rows, &y)
    }

    /// Re-expresses the operator at another truncation order. Shrinking crops
    /// the central blocks; growing re-runs the construction from the stored
    /// series.
    pub fn regrid(&self, hmax: usize) -> Result<Self> {
        let target = self.index_set.with_hmax(hmax);
        let cur = self.index_set.hmax();
        if hmax == cur {
            return Ok(self.clone());
        }
        if hmax < cur {
            let off = cur - hmax;
            let k = target.len();
            let matrix = linalg::block(
                &self.matrix,
                off * self.block_rows,
                off * self.block_cols,
                k * self.block_rows,
                k * self.block_cols,
            );
            return Ok(ToeplitzOperator {
                index_set: target,
                block_rows: self.block_rows,
                block_cols: self.block_cols,
                matrix,
                series: self.series.clone(),
            });
        }
        match &self.series {
            Some(s) => toeplitz_from_fourier(s, target),
            None => Err(config(
                "cannot enlarge an operator without its generating series",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE, ZERO};
    use faer::Mat;

    fn set(h: usize) -> HarmonicIndexSet {
        HarmonicIndexSet::new(h, 50.0).unwrap()
    }

    fn scalar(v: f64) -> CMat {
        Mat::from_fn(1, 1, |_, _| C64::new(v, 0.0))
    }

    fn cos_series() -> FourierSeries {
        FourierSeries::from_coefficients(1, 1, [(-1, scalar(1.0)), (1, scalar(1.0))]).unwrap()
    }

    #[test]
    fn dc_series_is_block_diagonal() {
        let t = toeplitz_from_fourier(&FourierSeries::constant(scalar(3.0)), set(1)).unwrap();
        let m = t.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { C64::new(3.0, 0.0) } else { ZERO };
                assert_eq!(m[(i, j)], e);
            }
        }
    }

    #[test]
    fn zero_series() {
        let t = toeplitz_from_fourier(&FourierSeries::zero(2, 2), set(2)).unwrap();
        assert_eq!((t.matrix().nrows(), t.matrix().ncols()), (10, 10));
        assert!(linalg::is_zero(t.matrix()));
    }

    #[test]
    fn cosine_couples_neighbours() {
        let t = toeplitz_from_fourier(&cos_series(), set(1)).unwrap();
        let m = t.matrix();
        let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[(i, j)], C64::new(expect[i][j], 0.0));
            }
        }
        let x = HarmonicSignal::from_orders(set(1), 1, [(0, vec![ONE])]).unwrap();
        let y = t.apply(&x).unwrap();
        assert_eq!(y.coeffs(), &[ONE, ZERO, ONE]);
    }

    #[test]
    fn order_above_hmax_rejected() {
        let s = FourierSeries::from_coefficients(1, 1, [(2, scalar(1.0))]).unwrap();
        assert!(toeplitz_from_fourier(&s, set(1)).is_err());
        assert!(toeplitz_from_fourier(&s.truncated(1), set(1)).is_ok());
    }

    #[test]
    fn regrid_same_is_identical() {
        let t = toeplitz_from_fourier(&cos_series(), set(2)).unwrap();
        let r = t.regrid(2).unwrap();
        assert!(linalg::bit_equal(t.matrix(), r.matrix()));
    }

    #[test]
    fn regrid_up_matches_rebuild() {
        let t = toeplitz_from_fourier(&cos_series(), set(1)).unwrap();
        let up = t.regrid(2).unwrap();
        let direct = toeplitz_from_fourier(&cos_series(), set(2)).unwrap();
        assert!(linalg::bit_equal(up.matrix(), direct.matrix()));
        assert_eq!(up.matrix().nrows(), 5);
    }

    #[test]
    fn regrid_dc_up_keeps_block() {
        let m = Mat::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 1.0));
        let t = toeplitz_from_fourier(&FourierSeries::constant(m.clone()), set(1)).unwrap();
        let up = t.regrid(3).unwrap();
        for b in 0..7 {
            assert!(linalg::bit_equal(&up.block(b, b), &m));
        }
    }

    #[test]
    fn regrid_down_crops_centre() {
        let t = toeplitz_from_fourier(&cos_series(), set(3)).unwrap();
        let d = t.regrid(1).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert!(linalg::bit_equal(&d.block(i, k), &t.block(i + 2, k + 2)));
            }
        }
    }

    #[test]
    fn cannot_grow_without_series() {
        let t = ToeplitzOperator::from_matrix(set(1), 1, 1, linalg::identity(3)).unwrap();
        assert!(t.regrid(2).is_err());
        assert!(t.regrid(0).is_ok());
    }
}
