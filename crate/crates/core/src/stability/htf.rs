//! Harmonic transfer function G(s) = C (sI + j Omega - A)^-1 E + F.

use crate::error::{HssError, Result};
use crate::linalg::{self, CMat, Lu, C64};
use crate::model::HssModel;

use super::eigen::eigenvalues;

const POLE_DISTANCE: f64 = 1e-9;
const SINGULAR_RCOND: f64 = 1e-14;

fn nearest(poles: &[C64], s: C64) -> Option<(C64, f64)> {
    poles
        .iter()
        .map(|&p| (p, (p - s).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Evaluates the HTF of `port` at `s`. When `poles` is given it is used for
/// the proximity check; otherwise the spectrum is computed only if the
/// resolvent turns out numerically singular.
pub fn evaluate_htf(model: &HssModel, port: &str, s: C64, poles: Option<&[C64]>) -> Result<CMat> {
    let p = model.port(port)?;
    let proximity = |(nearest, distance): (C64, f64)| HssError::PoleProximity {
        s: format!("{s}"),
        nearest: format!("{nearest}"),
        distance,
    };
    if let Some(poles) = poles {
        if let Some(n) = nearest(poles, s).filter(|n| n.1 <= POLE_DISTANCE) {
            return Err(proximity(n));
        }
    }
    let mut r = linalg::scaled(&model.shifted_state_matrix(), C64::new(-1.0, 0.0));
    for i in 0..r.nrows() {
        r[(i, i)] += s;
    }
    let lu = Lu::new(&r)?;
    if lu.rcond < SINGULAR_RCOND {
        let own;
        let poles = match poles {
            Some(p) => p,
            None => {
                own = eigenvalues(model)?;
                &own
            }
        };
        let n = nearest(poles, s).unwrap_or((s, 0.0));
        return Err(proximity(n));
    }
    let x = lu.solve(&p.e)?;
    Ok(&linalg::mul(model.c(), &x)? + &p.f)
}
