use std::fmt;

use faer::Mat;

use crate::error::{shape, HssError, Result};

/// Reference calculation w_kappa = r(w_rho, w_sigma) of a resource's
/// control software. Implementations must be pure functions.
pub trait ReferencePlugin: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn rho_dim(&self) -> usize;
    fn sigma_dim(&self) -> usize;
    fn kappa_dim(&self) -> usize;
    fn evaluate(&self, w_rho: &[f64], w_sigma: &[f64]) -> Result<Vec<f64>>;
    /// (d r / d w_rho, d r / d w_sigma) at the given point.
    fn jacobians(&self, w_rho: &[f64], w_sigma: &[f64]) -> Result<(Mat<f64>, Mat<f64>)>;
}

fn check_dims(p: &dyn ReferencePlugin, w_rho: &[f64], w_sigma: &[f64]) -> Result<()> {
    if w_rho.len() != p.rho_dim() || w_sigma.len() != p.sigma_dim() {
        return Err(shape(format!(
            "reference `{}` expects {} + {} inputs, got {} + {}",
            p.name(),
            p.rho_dim(),
            p.sigma_dim(),
            w_rho.len(),
            w_sigma.len()
        )));
    }
    Ok(())
}

/// w_kappa = M_rho w_rho + M_sigma w_sigma with constant matrices.
#[derive(Clone, Debug)]
pub struct LinearReference {
    m_rho: Mat<f64>,
    m_sigma: Mat<f64>,
}

impl LinearReference {
    pub fn new(m_rho: Mat<f64>, m_sigma: Mat<f64>) -> Result<Self> {
        if m_rho.nrows() != m_sigma.nrows() {
            return Err(shape("linear reference matrices disagree on output size"));
        }
        Ok(LinearReference { m_rho, m_sigma })
    }

    /// w_kappa = w_sigma, ignoring the grid-side input.
    pub fn setpoint_passthrough(rho_dim: usize, sigma_dim: usize) -> Self {
        LinearReference {
            m_rho: Mat::zeros(sigma_dim, rho_dim),
            m_sigma: Mat::identity(sigma_dim, sigma_dim),
        }
    }
}

impl ReferencePlugin for LinearReference {
    fn name(&self) -> &str {
        "linear"
    }

    fn rho_dim(&self) -> usize {
        self.m_rho.ncols()
    }

    fn sigma_dim(&self) -> usize {
        self.m_sigma.ncols()
    }

    fn kappa_dim(&self) -> usize {
        self.m_rho.nrows()
    }

    fn evaluate(&self, w_rho: &[f64], w_sigma: &[f64]) -> Result<Vec<f64>> {
        check_dims(self, w_rho, w_sigma)?;
        Ok((0..self.kappa_dim())
            .map(|i| {
                (0..w_rho.len()).map(|j| self.m_rho[(i, j)] * w_rho[j]).sum::<f64>()
                    + (0..w_sigma.len()).map(|j| self.m_sigma[(i, j)] * w_sigma[j]).sum::<f64>()
            })
            .collect())
    }

    fn jacobians(&self, w_rho: &[f64], w_sigma: &[f64]) -> Result<(Mat<f64>, Mat<f64>)> {
        check_dims(self, w_rho, w_sigma)?;
        Ok((self.m_rho.clone(), self.m_sigma.clone()))
    }
}

/// Current reference of a grid-following resource from active and reactive
/// power setpoints in the dq frame:
/// i_d = k (P v_d + Q v_q) / |v|^2, i_q = k (P v_q - Q v_d) / |v|^2,
/// with k = 2/3 for amplitude-invariant dq quantities.
#[derive(Clone, Debug)]
pub struct PqReference {
    gain: f64,
    min_voltage: f64,
}

impl Default for PqReference {
    fn default() -> Self {
        PqReference {
            gain: 2.0 / 3.0,
            min_voltage: 1e-6,
        }
    }
}

impl PqReference {
    pub fn new(gain: f64, min_voltage: f64) -> Self {
        PqReference { gain, min_voltage }
    }

    fn magnitude_sq(&self, v: &[f64]) -> Result<f64> {
        let d = v[0] * v[0] + v[1] * v[1];
        if !(d > self.min_voltage * self.min_voltage) {
            return Err(HssError::SingularOperatingPoint(format!(
                "PQ reference evaluated at dq voltage magnitude {:e}",
                d.sqrt()
            )));
        }
        Ok(d)
    }
}

impl ReferencePlugin for PqReference {
    fn name(&self) -> &str {
        "pq"
    }

    fn rho_dim(&self) -> usize {
        2
    }

    fn sigma_dim(&self) -> usize {
        2
    }

    fn kappa_dim(&self) -> usize {
        2
    }

    fn evaluate(&self, v: &[f64], s: &[f64]) -> Result<Vec<f64>> {
        check_dims(self, v, s)?;
        let d = self.magnitude_sq(v)?;
        let (p, q) = (s[0], s[1]);
        Ok(vec![
            self.gain * (p * v[0] + q * v[1]) / d,
            self.gain * (p * v[1] - q * v[0]) / d,
        ])
    }

    fn jacobians(&self, v: &[f64], s: &[f64]) -> Result<(Mat<f64>, Mat<f64>)> {
        check_dims(self, v, s)?;
        let d = self.magnitude_sq(v)?;
        let (vd, vq, p, q) = (v[0], v[1], s[0], s[1]);
        let k = self.gain;
        let a = p * vd + q * vq;
        let b = p * vq - q * vd;
        let d2 = d * d;
        let r_rho = crate::linalg::real_from_rows(&[
            &[k * (p * d - 2.0 * a * vd) / d2, k * (q * d - 2.0 * a * vq) / d2],
            &[k * (-q * d - 2.0 * b * vd) / d2, k * (p * d - 2.0 * b * vq) / d2],
        ]);
        let r_sigma = crate::linalg::real_from_rows(&[&[k * vd / d, k * vq / d], &[k * vq / d, -k * vd / d]]);
        Ok((r_rho, r_sigma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobians(p: &dyn ReferencePlugin, v: &[f64], s: &[f64]) -> (Mat<f64>, Mat<f64>) {
        let h = 1e-6;
        let k = p.kappa_dim();
        let mut jr = Mat::zeros(k, v.len());
        for j in 0..v.len() {
            let (mut up, mut dn) = (v.to_vec(), v.to_vec());
            let step = h * v[j].abs().max(1.0);
            up[j] += step;
            dn[j] -= step;
            let (fu, fd) = (p.evaluate(&up, s).unwrap(), p.evaluate(&dn, s).unwrap());
            for i in 0..k {
                jr[(i, j)] = (fu[i] - fd[i]) / (2.0 * step);
            }
        }
        let mut js = Mat::zeros(k, s.len());
        for j in 0..s.len() {
            let (mut up, mut dn) = (s.to_vec(), s.to_vec());
            let step = h * s[j].abs().max(1.0);
            up[j] += step;
            dn[j] -= step;
            let (fu, fd) = (p.evaluate(v, &up).unwrap(), p.evaluate(v, &dn).unwrap());
            for i in 0..k {
                js[(i, j)] = (fu[i] - fd[i]) / (2.0 * step);
            }
        }
        (jr, js)
    }

    #[test]
    fn pq_jacobians_match_central_differences() {
        let p = PqReference::default();
        for (v, s) in [([325.0, 12.0], [5e3, -1e3]), ([300.0, -40.0], [-2e3, 4e3])] {
            let (jr, js) = p.jacobians(&v, &s).unwrap();
            let (fr, fs) = fd_jacobians(&p, &v, &s);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((jr[(i, j)] - fr[(i, j)]).abs() <= 1e-6 * jr[(i, j)].abs().max(1e-3));
                    assert!((js[(i, j)] - fs[(i, j)]).abs() <= 1e-6 * js[(i, j)].abs().max(1e-6));
                }
            }
        }
    }

    #[test]
    fn pq_power_balance() {
        // injected power (3/2)(v_d i_d + v_q i_q) equals P
        let p = PqReference::default();
        let v = [310.0, 25.0];
        let i = p.evaluate(&v, &[4e3, 1e3]).unwrap();
        let pw = 1.5 * (v[0] * i[0] + v[1] * i[1]);
        let qw = 1.5 * (v[1] * i[0] - v[0] * i[1]);
        assert!((pw - 4e3).abs() < 1e-9);
        assert!((qw - 1e3).abs() < 1e-9);
    }

    #[test]
    fn pq_rejects_zero_voltage() {
        let p = PqReference::default();
        assert!(matches!(
            p.evaluate(&[0.0, 0.0], &[1.0, 0.0]),
            Err(HssError::SingularOperatingPoint(_))
        ));
    }

    #[test]
    fn passthrough_is_identity_on_setpoint() {
        let r = LinearReference::setpoint_passthrough(2, 2);
        let (jr, js) = r.jacobians(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(jr[(0, 0)], 0.0);
        assert_eq!(js[(1, 1)], 1.0);
        assert_eq!(r.evaluate(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }
}
