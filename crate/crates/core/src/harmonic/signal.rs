use std::f64::consts::PI;

use faer::Mat;

use super::{FourierSeries, HarmonicIndexSet};
use crate::error::{config, shape, Result};
use crate::linalg::{CMat, C64, ZERO};

/// Stacked Fourier coefficients of an n-channel periodic signal, ordered
/// h-major from -hmax upwards.
#[derive(Clone, Debug)]
pub struct HarmonicSignal {
    index_set: HarmonicIndexSet,
    channels: usize,
    coeffs: Vec<C64>,
    real_valued: bool,
}

const REAL_TOL: f64 = 1e-12;

impl HarmonicSignal {
    pub fn zeros(index_set: HarmonicIndexSet, channels: usize) -> Self {
        HarmonicSignal {
            index_set,
            channels,
            coeffs: vec![ZERO; index_set.len() * channels],
            real_valued: true,
        }
    }

    pub fn from_coefficients(
        index_set: HarmonicIndexSet,
        channels: usize,
        coeffs: Vec<C64>,
    ) -> Result<Self> {
        if coeffs.len() != index_set.len() * channels {
            return Err(shape(format!(
                "signal has {} coefficients, expected {} = {} orders x {} channels",
                coeffs.len(),
                index_set.len() * channels,
                index_set.len(),
                channels
            )));
        }
        Ok(HarmonicSignal {
            index_set,
            channels,
            coeffs,
            real_valued: false,
        })
    }

    /// Builds from per-order channel vectors; orders not listed are zero and
    /// orders beyond hmax are dropped.
    pub fn from_orders<I>(index_set: HarmonicIndexSet, channels: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Vec<C64>)>,
    {
        let mut s = HarmonicSignal::zeros(index_set, channels);
        s.real_valued = false;
        for (h, v) in items {
            if v.len() != channels {
                return Err(shape(format!(
                    "order {h} has {} channels, expected {channels}",
                    v.len()
                )));
            }
            if let Some(p) = index_set.position(h) {
                s.coeffs[p * channels..(p + 1) * channels].copy_from_slice(&v);
            }
        }
        Ok(s)
    }

    /// Sets the real-valued flag after checking conjugate symmetry.
    pub fn into_real(mut self) -> Result<Self> {
        if !self.check_conjugate_symmetry(REAL_TOL) {
            return Err(config(
                "signal flagged real-valued is not conjugate symmetric",
            ));
        }
        self.real_valued = true;
        Ok(self)
    }

    pub fn check_conjugate_symmetry(&self, tol: f64) -> bool {
        let n = self.channels;
        let len = self.index_set.len();
        (0..len).all(|p| {
            let q = len - 1 - p;
            (0..n).all(|c| (self.coeffs[p * n + c] - self.coeffs[q * n + c].conj()).norm() <= tol)
        })
    }

    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn coefficient(&self, h: i64, channel: usize) -> C64 {
        match self.index_set.position(h) {
            Some(p) => self.coeffs[p * self.channels + channel],
            None => ZERO,
        }
    }

    pub fn harmonic(&self, h: i64) -> Option<&[C64]> {
        let p = self.index_set.position(h)?;
        Some(&self.coeffs[p * self.channels..(p + 1) * self.channels])
    }

    /// Column vector view for matrix algebra.
    pub fn to_column(&self) -> CMat {
        Mat::from_fn(self.coeffs.len(), 1, |i, _| self.coeffs[i])
    }

    pub fn from_column(index_set: HarmonicIndexSet, channels: usize, col: &CMat) -> Result<Self> {
        if col.ncols() != 1 {
            return Err(shape("expected a single column"));
        }
        HarmonicSignal::from_coefficients(index_set, channels, (0..col.nrows()).map(|i| col[(i, 0)]).collect())
    }

    /// Channel values at time t.
    pub fn evaluate(&self, t: f64) -> Vec<C64> {
        let w = self.index_set.omega1();
        let mut out = vec![ZERO; self.channels];
        for (p, h) in self.index_set.orders().enumerate() {
            let e = C64::from_polar(1.0, w * h as f64 * t);
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.coeffs[p * self.channels + c] * e;
            }
        }
        out
    }

    /// Real part of the time-domain values at `count` uniform instants over
    /// one period. Row k holds the channel values at t = k T / count.
    pub fn sample_real(&self, count: usize) -> Vec<Vec<f64>> {
        let period = self.index_set.period();
        (0..count)
            .map(|k| {
                self.evaluate(k as f64 * period / count as f64)
                    .into_iter()
                    .map(|z| z.re)
                    .collect()
            })
            .collect()
    }

    /// Re-expresses the signal on another index set: orders beyond the new
    /// hmax are dropped, new orders are zero.
    pub fn regrid(&self, index_set: HarmonicIndexSet) -> Self {
        let mut out = HarmonicSignal::zeros(index_set, self.channels);
        for h in index_set.orders() {
            if let Some(v) = self.harmonic(h) {
                let p = index_set.position(h).unwrap();
                out.coeffs[p * self.channels..(p + 1) * self.channels].copy_from_slice(v);
            }
        }
        out.real_valued = self.real_valued;
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn twiddle(h: i64, k: usize, n: usize) -> C64 {
    // Reducing h*k modulo n keeps the angle argument small and exact.
    let r = (h.rem_euclid(n as i64) as u128 * k as u128 % n as u128) as f64;
    C64::from_polar(1.0, -2.0 * PI * r / n as f64)
}

fn check_count(count: usize, hmax: usize) -> Result<()> {
    if count < 2 * (2 * hmax + 1) {
        return Err(config(format!(
            "{count} samples per period cannot resolve hmax = {hmax}; need at least {}",
            2 * (2 * hmax + 1)
        )));
    }
    Ok(())
}

/// DFT of real samples taken uniformly over one period. `samples[k]` holds
/// the channel values at t = k T / N. The result is flagged real-valued and
/// its negative orders are the exact conjugates of the positive ones.
pub fn fourier_from_samples(samples: &[Vec<f64>], index_set: HarmonicIndexSet) -> Result<HarmonicSignal> {
    let n = samples.len();
    check_count(n, index_set.hmax())?;
    let channels = samples[0].len();
    if samples.iter().any(|s| s.len() != channels) {
        return Err(shape("samples have inconsistent channel counts"));
    }
    let mut out = HarmonicSignal::zeros(index_set, channels);
    let hmax = index_set.hmax() as i64;
    for h in 0..=hmax {
        let mut acc = vec![ZERO; channels];
        for (k, row) in samples.iter().enumerate() {
            let e = twiddle(h, k, n);
            for (a, x) in acc.iter_mut().zip(row) {
                *a += e * *x;
            }
        }
        let p = index_set.position(h).unwrap();
        let q = index_set.position(-h).unwrap();
        for c in 0..channels {
            let v = acc[c] / n as f64;
            let v = if h == 0 { C64::new(v.re, 0.0) } else { v };
            out.coeffs[p * channels + c] = v;
            out.coeffs[q * channels + c] = v.conj();
        }
    }
    out.real_valued = true;
    Ok(out)
}

/// DFT of complex samples; the real-valued flag is left unset.
pub fn fourier_from_complex_samples(
    samples: &[Vec<C64>],
    index_set: HarmonicIndexSet,
) -> Result<HarmonicSignal> {
    let n = samples.len();
    check_count(n, index_set.hmax())?;
    let channels = samples[0].len();
    if samples.iter().any(|s| s.len() != channels) {
        return Err(shape("samples have inconsistent channel counts"));
    }
    let mut coeffs = vec![ZERO; index_set.len() * channels];
    for (p, h) in index_set.orders().enumerate() {
        for (k, row) in samples.iter().enumerate() {
            let e = twiddle(h, k, n);
            for c in 0..channels {
                coeffs[p * channels + c] += e * row[c];
            }
        }
    }
    for c in coeffs.iter_mut() {
        *c /= n as f64;
    }
    HarmonicSignal::from_coefficients(index_set, channels, coeffs)
}

/// Fourier series (orders up to hmax) of a real matrix trajectory sampled
/// uniformly over one period.
pub fn series_from_samples(samples: &[Mat<f64>], index_set: HarmonicIndexSet) -> Result<FourierSeries> {
    let n = samples.len();
    check_count(n, index_set.hmax())?;
    let (r, c) = (samples[0].nrows(), samples[0].ncols());
    if samples.iter().any(|m| m.nrows() != r || m.ncols() != c) {
        return Err(shape("matrix samples have inconsistent shapes"));
    }
    let mut series = FourierSeries::zero(r, c);
    let hmax = index_set.hmax() as i64;
    for h in 0..=hmax {
        let mut acc = Mat::<C64>::zeros(r, c);
        for (k, m) in samples.iter().enumerate() {
            let e = twiddle(h, k, n);
            for j in 0..c {
                for i in 0..r {
                    acc[(i, j)] += e * m[(i, j)];
                }
            }
        }
        let acc = Mat::from_fn(r, c, |i, j| {
            let v = acc[(i, j)] / n as f64;
            if h == 0 {
                C64::new(v.re, 0.0)
            } else {
                v
            }
        });
        if h != 0 {
            let conj = Mat::from_fn(r, c, |i, j| acc[(i, j)].conj());
            series.insert(-h, conj)?;
        }
        series.insert(h, acc)?;
    }
    Ok(series)
}
