use faer::Mat;

use super::HarmonicIndexSet;
use crate::error::{shape, Result};
use crate::linalg::{CMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grouping {
    /// All channels of order -hmax first, then the next order, and so on.
    HarmonicMajor,
    /// All orders of the first group first, then the next group.
    NodeMajor,
}

/// Describes how a stacked harmonic vector is laid out: groups (nodes or
/// components) of `node_dims[g]` channels, each over every retained order.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupingLayout {
    ordering: Grouping,
    node_dims: Vec<usize>,
    offsets: Vec<usize>,
    index_set: HarmonicIndexSet,
}

impl GroupingLayout {
    pub fn new(ordering: Grouping, node_dims: Vec<usize>, index_set: HarmonicIndexSet) -> Self {
        let mut offsets = Vec::with_capacity(node_dims.len());
        let mut acc = 0;
        for d in &node_dims {
            offsets.push(acc);
            acc += d;
        }
        GroupingLayout {
            ordering,
            node_dims,
            offsets,
            index_set,
        }
    }

    pub fn ordering(&self) -> Grouping {
        self.ordering
    }

    pub fn node_dims(&self) -> &[usize] {
        &self.node_dims
    }

    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn groups(&self) -> usize {
        self.node_dims.len()
    }

    /// Channels per order, summed over groups.
    pub fn channels(&self) -> usize {
        self.node_dims.iter().sum()
    }

    pub fn total_dim(&self) -> usize {
        self.index_set.len() * self.channels()
    }

    /// Position of (group, order position, channel).
    pub fn index(&self, group: usize, pos: usize, channel: usize) -> usize {
        debug_assert!(channel < self.node_dims[group] && pos < self.index_set.len());
        match self.ordering {
            Grouping::HarmonicMajor => pos * self.channels() + self.offsets[group] + channel,
            Grouping::NodeMajor => {
                self.index_set.len() * self.offsets[group] + pos * self.node_dims[group] + channel
            }
        }
    }

    /// Inverse of `index`.
    pub fn locate(&self, idx: usize) -> (usize, usize, usize) {
        let len = self.index_set.len();
        match self.ordering {
            Grouping::HarmonicMajor => {
                let d = self.channels();
                let (pos, rem) = (idx / d, idx % d);
                let g = self.group_of_offset(rem);
                (g, pos, rem - self.offsets[g])
            }
            Grouping::NodeMajor => {
                let g = self.group_of_offset(idx / len);
                // idx / len is only a hint for the group; refine by bounds.
                let mut g = g;
                while idx >= len * (self.offsets[g] + self.node_dims[g]) {
                    g += 1;
                }
                while idx < len * self.offsets[g] {
                    g -= 1;
                }
                let rem = idx - len * self.offsets[g];
                (g, rem / self.node_dims[g], rem % self.node_dims[g])
            }
        }
    }

    fn group_of_offset(&self, off: usize) -> usize {
        // last group whose offset is <= off and that is non-empty
        let mut g = match self.offsets.binary_search(&off) {
            Ok(mut g) => {
                while g + 1 < self.offsets.len() && self.offsets[g + 1] == off {
                    g += 1;
                }
                g
            }
            Err(g) => g - 1,
        };
        while self.node_dims[g] == 0 && g > 0 {
            g -= 1;
        }
        g
    }

    /// Harmonic order carried by position `idx`.
    pub fn order_of(&self, idx: usize) -> i64 {
        self.index_set.order_at(self.locate(idx).1)
    }

    pub fn with_ordering(&self, ordering: Grouping) -> Self {
        GroupingLayout {
            ordering,
            ..self.clone()
        }
    }

    pub fn with_hmax(&self, hmax: usize) -> Self {
        GroupingLayout {
            index_set: self.index_set.with_hmax(hmax),
            ..self.clone()
        }
    }

    /// `p[new] = old`: entry `new` of the target layout takes entry `old` of
    /// this layout.
    pub fn permutation_to(&self, target: Grouping) -> Vec<usize> {
        let t = self.with_ordering(target);
        let mut p = vec![0; self.total_dim()];
        for g in 0..self.groups() {
            for pos in 0..self.index_set.len() {
                for c in 0..self.node_dims[g] {
                    p[t.index(g, pos, c)] = self.index(g, pos, c);
                }
            }
        }
        p
    }

    /// 0/1 matrix P with P x = x permuted into the target ordering.
    pub fn permutation_matrix(&self, target: Grouping) -> Mat<f64> {
        let p = self.permutation_to(target);
        let n = p.len();
        let mut m = Mat::zeros(n, n);
        for (new, old) in p.iter().enumerate() {
            m[(new, *old)] = 1.0;
        }
        m
    }

    /// Index that carries the same group and channel at the opposite order.
    pub fn flip_permutation(&self) -> Vec<usize> {
        let len = self.index_set.len();
        (0..self.total_dim())
            .map(|i| {
                let (g, pos, c) = self.locate(i);
                self.index(g, len - 1 - pos, c)
            })
            .collect()
    }

    /// Positions of this layout retained at a smaller hmax, listed in the
    /// order of the smaller layout.
    pub fn crop_indices(&self, hmax: usize) -> Result<Vec<usize>> {
        let cur = self.index_set.hmax();
        if hmax > cur {
            return Err(shape(format!("cannot crop hmax {cur} to larger {hmax}")));
        }
        let small = self.with_hmax(hmax);
        let off = cur - hmax;
        let mut out = vec![0; small.total_dim()];
        for g in 0..self.groups() {
            for pos in 0..small.index_set.len() {
                for c in 0..self.node_dims[g] {
                    out[small.index(g, pos, c)] = self.index(g, pos + off, c);
                }
            }
        }
        Ok(out)
    }

    /// Concatenates node-major layouts group-wise.
    pub fn concat(parts: &[&GroupingLayout]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| shape("empty layout list"))?;
        let mut dims = Vec::new();
        for p in parts {
            if !p.index_set.same_as(&first.index_set) {
                return Err(shape("layouts with different index sets"));
            }
            if p.ordering != Grouping::NodeMajor && p.groups() > 1 {
                return Err(shape("only node-major layouts concatenate group-wise"));
            }
            dims.extend_from_slice(&p.node_dims);
        }
        Ok(GroupingLayout::new(Grouping::NodeMajor, dims, first.index_set))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.total_dim() {
            return Err(shape(format!(
                "layout describes {} entries, object has {n}",
                self.total_dim()
            )));
        }
        Ok(())
    }

    pub fn permute_rows(&self, m: &CMat, target: Grouping) -> Result<CMat> {
        self.check_len(m.nrows())?;
        let p = self.permutation_to(target);
        Ok(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(p[i], j)]))
    }

    pub fn permute_cols(&self, m: &CMat, target: Grouping) -> Result<CMat> {
        self.check_len(m.ncols())?;
        let p = self.permutation_to(target);
        Ok(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, p[j])]))
    }
}

/// Reorders a stacked vector into the target ordering.
pub fn permute_grouping_vector(
    layout: &GroupingLayout,
    x: &[C64],
    target: Grouping,
) -> Result<(Vec<C64>, GroupingLayout)> {
    layout.check_len(x.len())?;
    let p = layout.permutation_to(target);
    Ok((p.iter().map(|&o| x[o]).collect(), layout.with_ordering(target)))
}

/// Similarity reordering of a square matrix whose rows and columns share
/// `layout`.
pub fn permute_grouping_matrix(
    layout: &GroupingLayout,
    m: &CMat,
    target: Grouping,
) -> Result<(CMat, GroupingLayout)> {
    layout.check_len(m.nrows())?;
    layout.check_len(m.ncols())?;
    let p = layout.permutation_to(target);
    Ok((
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(p[i], p[j])]),
        layout.with_ordering(target),
    ))
}
