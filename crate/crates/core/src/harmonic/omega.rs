use super::HarmonicIndexSet;
use crate::error::{shape, Result};
use crate::linalg::{CMat, C64};

/// Diagonal frequency-shift operator 2 pi f1 diag(h), each order repeated
/// block_dim times.
#[derive(Clone, Debug)]
pub struct OmegaOperator {
    index_set: HarmonicIndexSet,
    block_dim: usize,
    diagonal: Vec<f64>,
}

pub fn build_omega(index_set: HarmonicIndexSet, block_dim: usize) -> Result<OmegaOperator> {
    if block_dim == 0 {
        return Err(shape("omega operator needs block_dim >= 1"));
    }
    let w = index_set.omega1();
    let diagonal = index_set
        .orders()
        .flat_map(|h| std::iter::repeat_n(w * h as f64, block_dim))
        .collect();
    Ok(OmegaOperator {
        index_set,
        block_dim,
        diagonal,
    })
}

impl OmegaOperator {
    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn to_matrix(&self) -> CMat {
        let n = self.diagonal.len();
        faer::Mat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(self.diagonal[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fifty_hertz_first_order() {
        let o = build_omega(HarmonicIndexSet::new(1, 50.0).unwrap(), 1).unwrap();
        assert_eq!(o.diagonal(), &[-100.0 * PI, 0.0, 100.0 * PI]);
    }

    #[test]
    fn dc_only_is_zero() {
        let o = build_omega(HarmonicIndexSet::new(0, 50.0).unwrap(), 3).unwrap();
        assert_eq!(o.diagonal(), &[0.0; 3]);
    }

    #[test]
    fn sixty_hertz_blocks() {
        let o = build_omega(HarmonicIndexSet::new(2, 60.0).unwrap(), 2).unwrap();
        let d = o.diagonal();
        assert_eq!(d.len(), 10);
        assert!((d[0] + 240.0 * PI).abs() < 1e-12);
        assert_eq!(d[0], d[1]);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        assert!(o.to_matrix()[(0, 1)] == C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_block_dim_rejected() {
        assert!(build_omega(HarmonicIndexSet::new(1, 50.0).unwrap(), 0).is_err());
    }
}
