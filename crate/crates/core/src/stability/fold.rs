//! Folding spectra into the fundamental strip Im in (-pi f1, pi f1].

use std::f64::consts::PI;

use crate::linalg::C64;

/// Representative of a folded cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Folded {
    pub value: C64,
    pub multiplicity: usize,
    /// Indices of the original eigenvalues in the cluster.
    pub members: Vec<usize>,
}

/// lambda + j 2 pi f1 m with Im in (-pi f1, pi f1].
pub fn fold_value(z: C64, f1: f64) -> C64 {
    let w = 2.0 * PI * f1;
    let m = ((w / 2.0 - z.im) / w).floor();
    C64::new(z.re, z.im + m * w)
}

/// Distance between two points of the strip, treating its edges as glued.
pub fn strip_distance(a: C64, b: C64, f1: f64) -> f64 {
    let w = 2.0 * PI * f1;
    [-w, 0.0, w]
        .iter()
        .map(|s| (a - b + C64::new(0.0, *s)).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Folds and merges representatives closer than `merge_tol` (default 1e-9).
pub fn fold_to_strip(eigenvalues: &[C64], f1: f64, merge_tol: Option<f64>) -> Vec<Folded> {
    let tol = merge_tol.unwrap_or(1e-9);
    let folded: Vec<C64> = eigenvalues.iter().map(|&z| fold_value(z, f1)).collect();
    let mut order: Vec<usize> = (0..folded.len()).collect();
    order.sort_by(|&a, &b| {
        folded[a]
            .re
            .total_cmp(&folded[b].re)
            .then(folded[a].im.total_cmp(&folded[b].im))
            .then(a.cmp(&b))
    });
    let mut out: Vec<Folded> = Vec::new();
    for i in order {
        let z = folded[i];
        match out.iter_mut().find(|c| strip_distance(c.value, z, f1) <= tol) {
            Some(c) => {
                c.multiplicity += 1;
                c.members.push(i);
            }
            None => out.push(Folded {
                value: z,
                multiplicity: 1,
                members: vec![i],
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_multiple_folds_to_real_axis() {
        let z = fold_value(C64::new(-1.0, 2.0 * PI * 50.0 * 3.0), 50.0);
        assert_eq!(z.re, -1.0);
        assert!(z.im.abs() < 1e-12);
    }

    #[test]
    fn upper_boundary_is_kept() {
        let z = C64::new(-1.0, PI * 50.0);
        assert_eq!(fold_value(z, 50.0), z);
        let low = fold_value(C64::new(-1.0, -PI * 50.0), 50.0);
        assert!((low.im - PI * 50.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_collapses_to_one_representative() {
        let w = 2.0 * PI * 50.0;
        let ladder: Vec<C64> = (-4..=4).map(|h| C64::new(-3.0, 7.0 - w * h as f64)).collect();
        let f = fold_to_strip(&ladder, 50.0, None);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].multiplicity, 9);
    }
}
