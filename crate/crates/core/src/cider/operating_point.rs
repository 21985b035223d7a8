
use super::ReferencePlugin;
use crate::error::{shape, Result};
use crate::harmonic::{
    default_sample_count, fourier_from_samples, series_from_samples, toeplitz_from_fourier, HarmonicIndexSet,
    HarmonicSignal, ToeplitzOperator,
};
use crate::linalg::{self, CMat};

/// Linearisation trajectory of a resource, all as harmonic spectra.
#[derive(Clone, Debug)]
pub struct OperatingPoint {
    pub w_rho: HarmonicSignal,
    pub w_sigma: HarmonicSignal,
    pub w_pi: HarmonicSignal,
    pub w_kappa: HarmonicSignal,
}

fn samples(index_set: HarmonicIndexSet) -> usize {
    default_sample_count(index_set.hmax())
}

/// Time-domain pairs (w_rho(t_k), w_sigma(t_k)) over one period.
fn trajectory(w_rho: &HarmonicSignal, w_sigma: &HarmonicSignal) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = samples(w_rho.index_set());
    w_rho.sample_real(n).into_iter().zip(w_sigma.sample_real(n)).collect()
}

impl OperatingPoint {
    /// Derives W_rho = T_{kappa|pi} W_pi and W_kappa = r(W_rho, W_sigma).
    pub fn derive(
        plugin: &dyn ReferencePlugin,
        w_pi: HarmonicSignal,
        w_sigma: HarmonicSignal,
        t_kappa_pi: &ToeplitzOperator,
    ) -> Result<Self> {
        if w_sigma.channels() != plugin.sigma_dim() {
            return Err(shape(format!(
                "setpoint has {} channels, reference `{}` expects {}",
                w_sigma.channels(),
                plugin.name(),
                plugin.sigma_dim()
            )));
        }
        let w_rho = t_kappa_pi.apply(&w_pi)?;
        if w_rho.channels() != plugin.rho_dim() {
            return Err(shape(format!(
                "transformed disturbance has {} channels, reference `{}` expects {}",
                w_rho.channels(),
                plugin.name(),
                plugin.rho_dim()
            )));
        }
        let mut values = Vec::new();
        for (r, s) in trajectory(&w_rho, &w_sigma) {
            values.push(plugin.evaluate(&r, &s)?);
        }
        let w_kappa = fourier_from_samples(&values, w_rho.index_set())?;
        Ok(OperatingPoint {
            w_rho,
            w_sigma,
            w_pi,
            w_kappa,
        })
    }

    /// col(W_kappa, W_pi, W_sigma)
    pub fn packed(&self) -> CMat {
        linalg::vstack(&[&self.w_kappa.to_column(), &self.w_pi.to_column(), &self.w_sigma.to_column()])
            .expect("single columns stack")
    }

    /// Largest deviation between the stored W_kappa and a fresh evaluation of
    /// the plugin along the trajectory.
    pub fn residual(&self, plugin: &dyn ReferencePlugin) -> Result<f64> {
        let mut values = Vec::new();
        for (r, s) in trajectory(&self.w_rho, &self.w_sigma) {
            values.push(plugin.evaluate(&r, &s)?);
        }
        let fresh = fourier_from_samples(&values, self.w_rho.index_set())?;
        Ok(fresh.max_abs_diff(&self.w_kappa))
    }
}

/// Samples the plugin Jacobians along the operating trajectory and lifts
/// them to Toeplitz operators (R_rho, R_sigma).
pub fn linearize_reference(
    plugin: &dyn ReferencePlugin,
    op: &OperatingPoint,
) -> Result<(ToeplitzOperator, ToeplitzOperator)> {
    let set = op.w_rho.index_set();
    let mut jr = Vec::new();
    let mut js = Vec::new();
    for (r, s) in trajectory(&op.w_rho, &op.w_sigma) {
        let (a, b) = plugin.jacobians(&r, &s)?;
        jr.push(a);
        js.push(b);
    }
    let sr = series_from_samples(&jr, set)?;
    let ss = series_from_samples(&js, set)?;
    Ok((toeplitz_from_fourier(&sr, set)?, toeplitz_from_fourier(&ss, set)?))
}

/// Shift-of-origin form W_kappa = R_o W_o + R_rho T W_pi + R_sigma W_sigma.
#[derive(Clone, Debug)]
pub struct ReferenceBlock {
    /// [I | -R_rho T_{kappa|pi} | -R_sigma]
    pub r_o: CMat,
    /// col(W_kappa, W_pi, W_sigma) at the operating point.
    pub w_o: CMat,
}

pub fn build_reference_block(
    r_rho: &ToeplitzOperator,
    r_sigma: &ToeplitzOperator,
    t_kappa_pi: &ToeplitzOperator,
    op: &OperatingPoint,
) -> Result<ReferenceBlock> {
    let rt = linalg::mul(r_rho.matrix(), t_kappa_pi.matrix())?;
    let k = rt.nrows();
    if r_sigma.matrix().nrows() != k {
        return Err(shape("R_rho and R_sigma disagree on the reference width"));
    }
    let minus = |m: &CMat| linalg::scaled(m, linalg::C64::new(-1.0, 0.0));
    let r_o = linalg::hstack(&[&linalg::identity(k), &minus(&rt), &minus(r_sigma.matrix())])?;
    let w_o = op.packed();
    if w_o.nrows() != r_o.ncols() {
        return Err(shape(format!(
            "operating point has {} entries, reference block expects {}",
            w_o.nrows(),
            r_o.ncols()
        )));
    }
    Ok(ReferenceBlock { r_o, w_o })
}
