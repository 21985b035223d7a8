use faer::Mat;

use crate::error::{shape, Result};
use crate::harmonic::{toeplitz_from_fourier, FourierSeries, HarmonicIndexSet};
use crate::linalg::{self, CMat};

/// Linear time-periodic block x' = A(t) x + B(t) u, y = C(t) x + D(t) u.
///
/// Inputs are ordered [external disturbances | internally routed inputs] and
/// outputs [external outputs | internally routed outputs].
#[derive(Clone, Debug)]
pub struct LtpBlock {
    name: String,
    a: FourierSeries,
    b: FourierSeries,
    c: FourierSeries,
    d: FourierSeries,
    disturbance_inputs: usize,
    external_outputs: usize,
}

/// Toeplitz lifts of the four block matrices.
#[derive(Clone, Debug)]
pub struct LiftedBlock {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
}

impl LtpBlock {
    pub fn new(
        name: impl Into<String>,
        a: FourierSeries,
        b: FourierSeries,
        c: FourierSeries,
        d: FourierSeries,
        disturbance_inputs: usize,
        external_outputs: usize,
    ) -> Result<Self> {
        let name = name.into();
        let n = a.rows();
        let (m, p) = (b.cols(), c.rows());
        let ok = a.cols() == n && b.rows() == n && c.cols() == n && d.rows() == p && d.cols() == m;
        if !ok {
            return Err(shape(format!(
                "block `{name}`: A {}x{}, B {}x{}, C {}x{}, D {}x{} are inconsistent",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols(),
                d.rows(),
                d.cols()
            )));
        }
        if disturbance_inputs > m || external_outputs > p {
            return Err(shape(format!(
                "block `{name}`: {disturbance_inputs} disturbance inputs of {m}, {external_outputs} external outputs of {p}"
            )));
        }
        Ok(LtpBlock {
            name,
            a,
            b,
            c,
            d,
            disturbance_inputs,
            external_outputs,
        })
    }

    /// Constant block from real matrices.
    pub fn lti(
        name: impl Into<String>,
        a: Mat<f64>,
        b: Mat<f64>,
        c: Mat<f64>,
        d: Mat<f64>,
        disturbance_inputs: usize,
        external_outputs: usize,
    ) -> Result<Self> {
        LtpBlock::new(
            name,
            FourierSeries::constant_real(&a),
            FourierSeries::constant_real(&b),
            FourierSeries::constant_real(&c),
            FourierSeries::constant_real(&d),
            disturbance_inputs,
            external_outputs,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    pub fn disturbance_inputs(&self) -> usize {
        self.disturbance_inputs
    }

    pub fn routed_inputs(&self) -> usize {
        self.inputs() - self.disturbance_inputs
    }

    pub fn external_outputs(&self) -> usize {
        self.external_outputs
    }

    pub fn routed_outputs(&self) -> usize {
        self.outputs() - self.external_outputs
    }

    pub fn series(&self) -> [&FourierSeries; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// Stacks blocks into one: states block-diagonal, inputs regrouped as
    /// [all disturbances | all routed inputs], outputs as [all external | all
    /// routed], each in block order.
    pub fn stack(name: impl Into<String>, blocks: &[LtpBlock]) -> Result<LtpBlock> {
        let a = FourierSeries::block_diag(&blocks.iter().map(|b| &b.a).collect::<Vec<_>>());
        let b = FourierSeries::block_diag(&blocks.iter().map(|b| &b.b).collect::<Vec<_>>());
        let c = FourierSeries::block_diag(&blocks.iter().map(|b| &b.c).collect::<Vec<_>>());
        let d = FourierSeries::block_diag(&blocks.iter().map(|b| &b.d).collect::<Vec<_>>());
        let mut in_dist = Vec::new();
        let mut in_routed = Vec::new();
        let mut out_ext = Vec::new();
        let mut out_routed = Vec::new();
        let (mut i0, mut o0) = (0, 0);
        for blk in blocks {
            in_dist.extend(i0..i0 + blk.disturbance_inputs);
            in_routed.extend(i0 + blk.disturbance_inputs..i0 + blk.inputs());
            out_ext.extend(o0..o0 + blk.external_outputs);
            out_routed.extend(o0 + blk.external_outputs..o0 + blk.outputs());
            i0 += blk.inputs();
            o0 += blk.outputs();
        }
        let n_dist = in_dist.len();
        let n_ext = out_ext.len();
        let cols: Vec<usize> = in_dist.into_iter().chain(in_routed).collect();
        let rows: Vec<usize> = out_ext.into_iter().chain(out_routed).collect();
        let all_states: Vec<usize> = (0..a.rows()).collect();
        LtpBlock::new(
            name,
            a,
            b.select(&all_states, &cols),
            c.select(&rows, &all_states),
            d.select(&rows, &cols),
            n_dist,
            n_ext,
        )
    }

    /// Lifts each matrix after truncating its series to hmax.
    pub fn lift(&self, index_set: HarmonicIndexSet) -> Result<LiftedBlock> {
        let h = index_set.hmax();
        let lift = |s: &FourierSeries| toeplitz_from_fourier(&s.truncated(h), index_set).map(|t| t.into_matrix());
        Ok(LiftedBlock {
            a: lift(&self.a)?,
            b: lift(&self.b)?,
            c: lift(&self.c)?,
            d: lift(&self.d)?,
        })
    }
}

impl LiftedBlock {
    /// Column range of the lifted inputs for per-order channel range
    /// `start..start+len` out of `width` channels (lifted vectors are
    /// harmonic-major, so this is a strided selection).
    pub fn channel_indices(index_set: HarmonicIndexSet, width: usize, start: usize, len: usize) -> Vec<usize> {
        (0..index_set.len())
            .flat_map(|p| (start..start + len).map(move |c| p * width + c))
            .collect()
    }

    pub fn split_cols(m: &CMat, index_set: HarmonicIndexSet, width: usize, first: usize) -> (CMat, CMat) {
        let a = Self::channel_indices(index_set, width, 0, first);
        let b = Self::channel_indices(index_set, width, first, width - first);
        (linalg::select_cols(m, &a), linalg::select_cols(m, &b))
    }

    pub fn split_rows(m: &CMat, index_set: HarmonicIndexSet, width: usize, first: usize) -> (CMat, CMat) {
        let a = Self::channel_indices(index_set, width, 0, first);
        let b = Self::channel_indices(index_set, width, first, width - first);
        (linalg::select_rows(m, &a), linalg::select_rows(m, &b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(rows: &[&[f64]]) -> Mat<f64> {
        linalg::real_from_rows(rows)
    }

    #[test]
    fn inconsistent_dimensions_rejected() {
        let e = LtpBlock::lti("x", r(&[&[0.0]]), r(&[&[1.0, 2.0]]), r(&[&[1.0]]), r(&[&[0.0]]), 0, 0);
        assert!(e.is_err());
    }

    #[test]
    fn stacking_regroups_ports() {
        // block 1: 1 disturbance + 1 routed input, 1 external + 1 routed output
        let b1 = LtpBlock::lti(
            "b1",
            r(&[&[-1.0]]),
            r(&[&[1.0, 2.0]]),
            r(&[&[3.0], &[4.0]]),
            r(&[&[0.0, 0.0], &[0.0, 0.0]]),
            1,
            1,
        )
        .unwrap();
        let b2 = LtpBlock::lti(
            "b2",
            r(&[&[-2.0]]),
            r(&[&[5.0, 6.0]]),
            r(&[&[7.0], &[8.0]]),
            r(&[&[0.0, 0.0], &[0.0, 0.0]]),
            1,
            1,
        )
        .unwrap();
        let s = LtpBlock::stack("s", &[b1, b2]).unwrap();
        let set = HarmonicIndexSet::new(0, 50.0).unwrap();
        let l = s.lift(set).unwrap();
        let b: Vec<f64> = (0..4).map(|j| l.b[(0, j)].re + l.b[(1, j)].re).collect();
        assert_eq!(b, vec![1.0, 5.0, 2.0, 6.0]);
        let c: Vec<f64> = (0..4).map(|i| l.c[(i, 0)].re + l.c[(i, 1)].re).collect();
        assert_eq!(c, vec![3.0, 7.0, 4.0, 8.0]);
        assert_eq!((s.disturbance_inputs(), s.external_outputs()), (2, 2));
    }
}
