//! Closing a static feedback W_loop = J Y around an open HSS quadruple.

use crate::error::{HssError, Result};
use crate::linalg::{self, CMat, Lu, Selection, C64, ZERO};

/// How invertibility of (I - J F_loop) was established.
#[derive(Clone, Debug, PartialEq)]
pub enum WellPosedness {
    /// J F_loop has an acyclic dependency graph, so I - J F_loop is
    /// unipotent up to a permutation and its determinant is exactly 1.
    Triangular,
    /// A general LU factorisation was needed; `rcond` is the pivot-ratio
    /// condition estimate.
    General { rcond: f64 },
}

impl WellPosedness {
    pub fn determinant_is_one(&self) -> bool {
        matches!(self, WellPosedness::Triangular)
    }
}

/// Open quadruple around which the loop is closed.
pub struct FeedbackProblem<'a> {
    pub a: &'a CMat,
    /// Input matrix of the fed-back port.
    pub e_loop: &'a CMat,
    pub c: &'a CMat,
    /// Feedthrough of the fed-back port.
    pub f_loop: &'a CMat,
    /// Maps all outputs Y to the fed-back inputs.
    pub j: &'a CMat,
    /// (E_k, F_k) of the ports that stay open.
    pub others: Vec<(&'a CMat, &'a CMat)>,
    /// Named consecutive ranges of the fed-back inputs, used in diagnostics.
    pub loop_labels: Vec<(String, usize)>,
    /// Optional block partitions (states, loop inputs, outputs) that let the
    /// products skip zero blocks.
    pub partitions: Option<(Vec<usize>, Vec<usize>, Vec<usize>)>,
}

pub struct ClosedFeedback {
    pub a: CMat,
    pub c: CMat,
    pub e: Vec<CMat>,
    pub f: Vec<CMat>,
    pub certificate: WellPosedness,
}

const SINGULAR_RCOND: f64 = 1e-13;

fn apply_j_left(j: &CMat, sel: &Option<Selection>, x: &CMat) -> Result<CMat> {
    match sel {
        Some(s) => Ok(s.apply_left(x)),
        None => linalg::mul(j, x),
    }
}

fn apply_j_right(j: &CMat, sel: &Option<Selection>, x: &CMat) -> Result<CMat> {
    match sel {
        Some(s) => Ok(s.apply_right(x)),
        None => linalg::mul(x, j),
    }
}

/// Returns a dependency cycle of the loop-gain support graph, if any.
fn find_cycle(n: &CMat) -> Option<Vec<usize>> {
    let size = n.nrows();
    let adj: Vec<Vec<usize>> = (0..size)
        .map(|i| (0..size).filter(|&k| n[(i, k)] != ZERO).collect())
        .collect();
    // iterative DFS with colours
    let mut colour = vec![0u8; size];
    let mut parent = vec![usize::MAX; size];
    for root in 0..size {
        if colour[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        colour[root] = 1;
        while let Some((v, next)) = stack.pop() {
            if next < adj[v].len() {
                stack.push((v, next + 1));
                let w = adj[v][next];
                if colour[w] == 1 {
                    let mut cyc = vec![w];
                    let mut u = v;
                    while u != w {
                        cyc.push(u);
                        u = parent[u];
                    }
                    cyc.reverse();
                    return Some(cyc);
                }
                if colour[w] == 0 {
                    colour[w] = 1;
                    parent[w] = v;
                    stack.push((w, 0));
                }
            } else {
                colour[v] = 2;
            }
        }
    }
    None
}

fn describe(idx: usize, labels: &[(String, usize)]) -> String {
    let mut start = 0;
    for (name, len) in labels {
        if idx < start + len {
            return format!("{name}[{}]", idx - start);
        }
        start += len;
    }
    format!("input[{idx}]")
}

fn identity_minus(m: &CMat) -> CMat {
    let mut out = linalg::scaled(m, C64::new(-1.0, 0.0));
    for i in 0..m.nrows() {
        out[(i, i)] += C64::new(1.0, 0.0);
    }
    out
}

/// Closes W_loop = J Y:
/// A~ = A + E_loop (I - J F_loop)^-1 J C,
/// E~_k = E_k + E_loop (I - J F_loop)^-1 J F_k,
/// C~ = (I - F_loop J)^-1 C, F~_k = (I - F_loop J)^-1 F_k.
/// All inverses are realised by solves.
pub fn close_feedback(p: &FeedbackProblem<'_>) -> Result<ClosedFeedback> {
    let nx = p.a.nrows();
    let nw = p.e_loop.ncols();
    let ny = p.c.nrows();
    if p.j.nrows() != nw || p.j.ncols() != ny || p.f_loop.nrows() != ny || p.f_loop.ncols() != nw {
        return Err(HssError::Shape(format!(
            "feedback: J is {}x{}, expected {nw}x{ny}; F_loop is {}x{}",
            p.j.nrows(),
            p.j.ncols(),
            p.f_loop.nrows(),
            p.f_loop.ncols()
        )));
    }
    if p.e_loop.nrows() != nx || p.c.ncols() != nx {
        return Err(HssError::Shape("feedback: E_loop or C does not match A".into()));
    }
    let sel = Selection::detect(p.j);
    let n = apply_j_left(p.j, &sel, p.f_loop)?;
    let loop_is_zero = linalg::is_zero(&n);
    let fj = apply_j_right(p.j, &sel, p.f_loop)?;
    let fj_is_zero = linalg::is_zero(&fj);

    let certificate;
    let (lu_w, lu_y) = if loop_is_zero && fj_is_zero {
        certificate = WellPosedness::Triangular;
        (None, None)
    } else {
        let m = identity_minus(&n);
        let lu = Lu::new(&m)?;
        match find_cycle(&n) {
            None => certificate = WellPosedness::Triangular,
            Some(cycle) => {
                if lu.rcond < SINGULAR_RCOND {
                    let chain: Vec<String> = cycle.iter().map(|&i| describe(i, &p.loop_labels)).collect();
                    return Err(HssError::WellPosedness {
                        message: format!(
                            "algebraic loop matrix is singular along feedthrough chain {} -> {}",
                            chain.join(" -> "),
                            chain[0]
                        ),
                        condition: if lu.rcond > 0.0 { 1.0 / lu.rcond } else { f64::INFINITY },
                    });
                }
                certificate = WellPosedness::General { rcond: lu.rcond };
            }
        }
        let lu2 = Lu::new(&identity_minus(&fj))?;
        (Some(lu), Some(lu2))
    };

    let solve_w = |b: CMat| -> Result<CMat> {
        match &lu_w {
            Some(lu) => lu.solve(&b),
            None => Ok(b),
        }
    };
    let solve_y = |b: &CMat| -> Result<CMat> {
        match &lu_y {
            Some(lu) => lu.solve(b),
            None => Ok(b.clone()),
        }
    };
    let e_times = |x: &CMat| -> Result<CMat> {
        match &p.partitions {
            Some((xs, ws, _)) if x.ncols() == nx => linalg::mul_partitioned(p.e_loop, x, xs, ws, xs),
            _ => linalg::mul(p.e_loop, x),
        }
    };

    let jc = solve_w(apply_j_left(p.j, &sel, p.c)?)?;
    let a = &*p.a + &e_times(&jc)?;
    let c = solve_y(p.c)?;
    let mut e = Vec::with_capacity(p.others.len());
    let mut f = Vec::with_capacity(p.others.len());
    for (ek, fk) in &p.others {
        if ek.nrows() != nx || fk.nrows() != ny || ek.ncols() != fk.ncols() {
            return Err(HssError::Shape("feedback: open port does not match the model".into()));
        }
        let jf = solve_w(apply_j_left(p.j, &sel, fk)?)?;
        let add = if linalg::is_zero(&jf) {
            linalg::zeros(nx, ek.ncols())
        } else {
            linalg::mul(p.e_loop, &jf)?
        };
        e.push(&**ek + &add);
        f.push(solve_y(fk)?);
    }
    Ok(ClosedFeedback {
        a,
        c,
        e,
        f,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    fn m(rows: &[&[f64]]) -> CMat {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| C64::new(rows[i][j], 0.0))
    }

    #[test]
    fn scalar_toy_cancels() {
        let (a, e, c, f, j) = (m(&[&[-1.0]]), m(&[&[1.0]]), m(&[&[1.0]]), m(&[&[0.0]]), m(&[&[1.0]]));
        let r = close_feedback(&FeedbackProblem {
            a: &a,
            e_loop: &e,
            c: &c,
            f_loop: &f,
            j: &j,
            others: vec![],
            loop_labels: vec![],
            partitions: None,
        })
        .unwrap();
        assert_eq!(r.a[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(r.certificate, WellPosedness::Triangular);
    }

    #[test]
    fn zero_feedthrough_collapses() {
        let a = m(&[&[-1.0, 2.0], &[0.0, -3.0]]);
        let e = m(&[&[1.0, 0.0], &[0.5, 1.0]]);
        let c = m(&[&[1.0, 1.0], &[0.0, 2.0]]);
        let f = m(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let j = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = close_feedback(&FeedbackProblem {
            a: &a,
            e_loop: &e,
            c: &c,
            f_loop: &f,
            j: &j,
            others: vec![],
            loop_labels: vec![],
            partitions: None,
        })
        .unwrap();
        let expect = &a + &(&e * &(&j * &c));
        assert!(linalg::max_abs_diff(&r.a, &expect) == 0.0);
        assert!(linalg::bit_equal(&r.c, &c));
    }

    #[test]
    fn triangular_feedthrough_has_unit_determinant() {
        let a = m(&[&[-1.0, 0.0], &[0.0, -2.0]]);
        let e = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let c = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let f = m(&[&[0.0, 0.0], &[3.0, 0.0]]);
        let j = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = close_feedback(&FeedbackProblem {
            a: &a,
            e_loop: &e,
            c: &c,
            f_loop: &f,
            j: &j,
            others: vec![],
            loop_labels: vec![],
            partitions: None,
        })
        .unwrap();
        assert_eq!(r.certificate, WellPosedness::Triangular);
        let jf = &j * &f;
        let det = identity_minus(&jf).determinant();
        assert!((det - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn singular_loop_names_chain() {
        let a = m(&[&[-1.0]]);
        let e = m(&[&[1.0]]);
        let c = m(&[&[1.0]]);
        let f = m(&[&[1.0]]);
        let j = m(&[&[1.0]]);
        let err = close_feedback(&FeedbackProblem {
            a: &a,
            e_loop: &e,
            c: &c,
            f_loop: &f,
            j: &j,
            others: vec![],
            loop_labels: vec![("u".into(), 1)],
            partitions: None,
        })
        .err()
        .unwrap();
        match err {
            HssError::WellPosedness { message, .. } => assert!(message.contains("u[0]")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn general_loop_matches_explicit_inverse() {
        let a = m(&[&[-1.0, 0.3], &[0.1, -2.0]]);
        let e = m(&[&[1.0, 0.2], &[0.0, 1.0]]);
        let c = m(&[&[1.0, 0.0], &[0.4, 1.0]]);
        let f = m(&[&[0.1, 0.2], &[0.3, 0.1]]);
        let j = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e2 = m(&[&[0.5], &[1.0]]);
        let f2 = m(&[&[0.2], &[0.0]]);
        let r = close_feedback(&FeedbackProblem {
            a: &a,
            e_loop: &e,
            c: &c,
            f_loop: &f,
            j: &j,
            others: vec![(&e2, &f2)],
            loop_labels: vec![],
            partitions: None,
        })
        .unwrap();
        assert!(matches!(r.certificate, WellPosedness::General { .. }));
        let inv = linalg::inverse(&identity_minus(&(&j * &f))).unwrap();
        let a_ref = &a + &(&e * &(&inv * &(&j * &c)));
        assert!(linalg::max_abs_diff(&r.a, &a_ref) < 1e-13);
        let e_ref = &e2 + &(&e * &(&inv * &(&j * &f2)));
        assert!(linalg::max_abs_diff(&r.e[0], &e_ref) < 1e-13);
        let inv2 = linalg::inverse(&identity_minus(&(&f * &j))).unwrap();
        assert!(linalg::max_abs_diff(&r.c, &(&inv2 * &c)) < 1e-13);
        assert!(linalg::max_abs_diff(&r.f[0], &(&inv2 * &f2)) < 1e-13);
    }
}
