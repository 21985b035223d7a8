use std::f64::consts::PI;

use crate::error::{config, Result};

/// The harmonic orders -hmax..=hmax of a fundamental f1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicIndexSet {
    hmax: usize,
    f1: f64,
}

impl HarmonicIndexSet {
    pub fn new(hmax: usize, f1: f64) -> Result<Self> {
        if !(f1 > 0.0) || !f1.is_finite() {
            return Err(config(format!("fundamental frequency must be positive, got {f1}")));
        }
        Ok(HarmonicIndexSet { hmax, f1 })
    }

    pub fn hmax(&self) -> usize {
        self.hmax
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn omega1(&self) -> f64 {
        2.0 * PI * self.f1
    }

    /// Number of retained orders, 2*hmax + 1.
    pub fn len(&self) -> usize {
        2 * self.hmax + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn orders(&self) -> impl Iterator<Item = i64> + Clone {
        let h = self.hmax as i64;
        -h..=h
    }

    /// Order of the block at position `idx` (0 is -hmax).
    pub fn order_at(&self, idx: usize) -> i64 {
        idx as i64 - self.hmax as i64
    }

    pub fn position(&self, h: i64) -> Option<usize> {
        if h.unsigned_abs() as usize <= self.hmax {
            Some((h + self.hmax as i64) as usize)
        } else {
            None
        }
    }

    pub fn with_hmax(&self, hmax: usize) -> Self {
        HarmonicIndexSet { hmax, f1: self.f1 }
    }

    /// Period of the fundamental in seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.f1
    }

    pub(crate) fn same_as(&self, other: &Self) -> bool {
        self.hmax == other.hmax && self.f1.to_bits() == other.f1.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_symmetric_orders() {
        let s = HarmonicIndexSet::new(3, 50.0).unwrap();
        let o: Vec<i64> = s.orders().collect();
        assert_eq!(o, vec![-3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(s.len(), 7);
        assert_eq!(s.position(-3), Some(0));
        assert_eq!(s.position(4), None);
        assert_eq!(s.order_at(6), 3);
    }

    #[test]
    fn rejects_bad_frequency() {
        assert!(HarmonicIndexSet::new(1, 0.0).is_err());
        assert!(HarmonicIndexSet::new(1, -5.0).is_err());
        assert!(HarmonicIndexSet::new(1, f64::NAN).is_err());
    }

    #[test]
    fn zero_hmax_is_dc_only() {
        let s = HarmonicIndexSet::new(0, 60.0).unwrap();
        assert_eq!(s.orders().collect::<Vec<_>>(), vec![0]);
    }
}
