//! Exact linear sum assignment by shortest augmenting paths with dual
//! potentials (the Jonker-Volgenant family).

use crate::error::{shape, HssError, Result};
use crate::linalg::C64;

/// Minimum-cost assignment of rows to columns of a square cost matrix given
/// row-major. Returns `col_of_row`.
pub fn solve_assignment(n: usize, cost: &[f64]) -> Result<Vec<usize>> {
    if cost.len() != n * n {
        return Err(shape(format!("cost matrix has {} entries, expected {}", cost.len(), n * n)));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(HssError::Numerical("assignment costs must be finite".into()));
    }
    const NONE: usize = usize::MAX;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; n];
    let mut path = vec![NONE; n];
    let mut spc = vec![f64::INFINITY; n];
    let mut sr = vec![false; n];
    let mut sc = vec![false; n];
    let mut remaining = vec![0usize; n];

    for cur in 0..n {
        spc.fill(f64::INFINITY);
        path.fill(NONE);
        sr.fill(false);
        sc.fill(false);
        for (it, r) in remaining.iter_mut().enumerate() {
            *r = n - it - 1;
        }
        let mut left = n;
        let mut min_val = 0.0;
        let mut i = cur;
        let sink = loop {
            sr[i] = true;
            let mut index = NONE;
            let mut lowest = f64::INFINITY;
            for (it, &j) in remaining[..left].iter().enumerate() {
                let r = min_val + cost[i * n + j] - u[i] - v[j];
                if r < spc[j] {
                    path[j] = i;
                    spc[j] = r;
                }
                if spc[j] < lowest || (spc[j] == lowest && row4col[j] == NONE) {
                    lowest = spc[j];
                    index = it;
                }
            }
            min_val = lowest;
            if index == NONE {
                return Err(HssError::Numerical("assignment problem is infeasible".into()));
            }
            let j = remaining[index];
            sc[j] = true;
            left -= 1;
            remaining[index] = remaining[left];
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };
        u[cur] += min_val;
        for r in 0..n {
            if sr[r] && r != cur {
                u[r] += min_val - spc[col4row[r]];
            }
        }
        for c in 0..n {
            if sc[c] {
                v[c] -= min_val - spc[c];
            }
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur {
                break;
            }
        }
    }
    Ok(col4row)
}

/// Bijection between two eigenvalue sets: `pairs[i]` is the index in the
/// second set matched to element `i` of the first.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub pairs: Vec<usize>,
    pub costs: Vec<f64>,
    pub total: f64,
}

fn lexicographic(z: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[a].re.total_cmp(&z[b].re).then(z[a].im.total_cmp(&z[b].im)).then(a.cmp(&b)));
    idx
}

/// Minimum total |lambda_i - mu_j| bijection. Both sets are visited in
/// lexicographic (Re, Im) order, which fixes the outcome among ties.
pub fn match_eigenvalues(first: &[C64], second: &[C64]) -> Result<Matching> {
    let n = first.len();
    if second.len() != n {
        return Err(shape(format!("cannot match {n} eigenvalues against {}", second.len())));
    }
    let (ra, rb) = (lexicographic(first), lexicographic(second));
    let mut cost = Vec::with_capacity(n * n);
    for &i in &ra {
        for &j in &rb {
            cost.push((first[i] - second[j]).norm());
        }
    }
    let col = solve_assignment(n, &cost)?;
    let mut pairs = vec![0; n];
    let mut costs = vec![0.0; n];
    for (r, &i) in ra.iter().enumerate() {
        pairs[i] = rb[col[r]];
        costs[i] = cost[r * n + col[r]];
    }
    let total = ra.iter().map(|&i| costs[i]).sum();
    Ok(Matching { pairs, costs, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let a = [C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let b = [C64::new(2.1, 0.0), C64::new(0.9, 0.0)];
        let m = match_eigenvalues(&a, &b).unwrap();
        assert_eq!(m.pairs, vec![1, 0]);
        assert!((m.total - 0.2).abs() < 1e-12);
    }

    #[test]
    fn identical_sets_match_identically() {
        let a: Vec<C64> = (0..6).map(|k| C64::new(-(k as f64), k as f64 * 0.5)).collect();
        let m = match_eigenvalues(&a, &a).unwrap();
        assert_eq!(m.pairs, (0..6).collect::<Vec<_>>());
        assert_eq!(m.total, 0.0);
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(match_eigenvalues(&[C64::new(0.0, 0.0)], &[]).is_err());
    }

    #[test]
    fn handles_empty_and_degenerate() {
        assert_eq!(solve_assignment(0, &[]).unwrap(), Vec::<usize>::new());
        let c = vec![1.0; 9];
        let mut s = solve_assignment(3, &c).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1, 2]);
    }
}
