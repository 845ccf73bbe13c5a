//! Butterworth and notch IIR filters in second-order sections, applied
//! forward-backward for zero phase, plus integer-factor decimation.
//!
//! Design follows the usual analog-prototype route: poles of the order-N
//! Butterworth prototype, frequency transform (low-pass or band-pass) at
//! pre-warped edges `4 tan(pi f / fs)`, bilinear transform, then grouping
//! of conjugate roots into biquads. Zero-phase filtering pads both ends by
//! odd reflection and starts each pass from the steady state of a step.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const BUTTERWORTH_ORDER: usize = 5;
pub const NOTCH_Q: f64 = 30.0;
/// Anti-alias cutoff as a fraction of the target rate.
pub const ANTI_ALIAS_FRACTION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    Lowpass(f64),
    Bandpass(f64, f64),
}

/// Cascade of biquads `[b0, b1, b2, 1, a1, a2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    sections: Vec<[f64; 6]>,
}

impl Sos {
    pub fn from_sections(sections: Vec<[f64; 6]>) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::EmptyInput("second-order sections"));
        }
        if sections.iter().any(|s| s[3] != 1.0) {
            return Err(Error::InvalidBand("section denominators must be normalized (a0 = 1)".into()));
        }
        Ok(Self { sections })
    }

    pub fn butterworth(order: usize, band: Band, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidBand("filter order must be at least 1".into()));
        }
        let nyquist = fs / 2.0;
        let check = |f: f64, what: &str| {
            if !(f > 0.0 && f < nyquist) {
                Err(Error::InvalidBand(format!("{what} {f} Hz outside (0, {nyquist}) Hz")))
            } else {
                Ok(())
            }
        };
        let warp = |f: f64| 4.0 * (std::f64::consts::PI * f / fs).tan();
        let proto: Vec<Complex64> = (0..order)
            .map(|i| {
                let m = 2.0 * i as f64 - (order as f64 - 1.0);
                -Complex64::from_polar(1.0, std::f64::consts::PI * m / (2.0 * order as f64))
            })
            .collect();

        let (zeros, poles, gain) = match band {
            Band::Lowpass(cut) => {
                check(cut, "cutoff")?;
                let wo = warp(cut);
                let poles: Vec<_> = proto.iter().map(|p| p * wo).collect();
                (Vec::new(), poles, wo.powi(order as i32))
            }
            Band::Bandpass(low, high) => {
                check(low, "low edge")?;
                check(high, "high edge")?;
                if low >= high {
                    return Err(Error::InvalidBand(format!("low edge {low} Hz must be below high edge {high} Hz")));
                }
                let (w1, w2) = (warp(low), warp(high));
                let bw = w2 - w1;
                let wo2 = Complex64::from(w1 * w2);
                let mut poles = Vec::with_capacity(2 * order);
                for p in &proto {
                    let pl = p * (bw / 2.0);
                    let root = (pl * pl - wo2).sqrt();
                    poles.push(pl + root);
                    poles.push(pl - root);
                }
                (vec![Complex64::new(0.0, 0.0); order], poles, bw.powi(order as i32))
            }
        };

        // Bilinear transform with fs = 2 (edges were pre-warped with the same
        // constant).
        let fs2 = Complex64::from(4.0);
        let num: Complex64 = zeros.iter().map(|z| fs2 - z).product();
        let den: Complex64 = poles.iter().map(|p| fs2 - p).product();
        let gain = gain * (num / den).re;
        let mut zd: Vec<Complex64> = zeros.iter().map(|z| (fs2 + z) / (fs2 - z)).collect();
        zd.resize(poles.len(), Complex64::new(-1.0, 0.0));
        let pd: Vec<Complex64> = poles.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();
        Self::from_zpk(&zd, &pd, gain)
    }

    /// Second-order IIR notch with quality factor `q`.
    pub fn notch(freq: f64, q: f64, fs: f64) -> Result<Self> {
        if !(freq > 0.0 && freq < fs / 2.0) {
            return Err(Error::InvalidBand(format!("notch {freq} Hz outside (0, {}) Hz", fs / 2.0)));
        }
        if q <= 0.0 {
            return Err(Error::InvalidBand(format!("notch quality factor {q} must be positive")));
        }
        let w0 = freq / (fs / 2.0);
        let bw = w0 / q;
        let beta = (bw * std::f64::consts::PI / 2.0).tan();
        let gain = 1.0 / (1.0 + beta);
        let c = (w0 * std::f64::consts::PI).cos();
        Self::from_sections(vec![[gain, -2.0 * gain * c, gain, 1.0, -2.0 * gain * c, 2.0 * gain - 1.0]])
    }

    fn from_zpk(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> Result<Self> {
        let mut pole_quads = quadratics(poles);
        // Sections whose poles sit closest to the unit circle go last.
        pole_quads.sort_by(|a, b| a.1.total_cmp(&b.1));
        let zero_quads = quadratics(zeros);
        if zero_quads.len() != pole_quads.len() {
            return Err(Error::InvalidBand("cannot pair zeros with poles".into()));
        }
        let mut sections: Vec<[f64; 6]> = zero_quads
            .iter()
            .zip(&pole_quads)
            .map(|((b, _), (a, _))| [b[0], b[1], b[2], 1.0, a[1], a[2]])
            .collect();
        for v in &mut sections[0][..3] {
            *v *= gain;
        }
        Self::from_sections(sections)
    }

    pub fn sections(&self) -> &[[f64; 6]] {
        &self.sections
    }

    /// Frequency response at `f` Hz.
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f / fs);
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|s| (s[0] + s[1] * z1 + s[2] * z2) / (1.0 + s[4] * z1 + s[5] * z2))
            .product()
    }

    /// Per-section delay states for the steady-state response to a unit
    /// step.
    pub fn steady_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [b0, b1, b2, _, a1, a2] = *s;
                let r0 = b1 - a1 * b0;
                let r1 = b2 - a2 * b0;
                let z0 = (r0 + r1) / (1.0 + a1 + a2);
                let z1 = r1 - a2 * z0;
                let zi = [z0 * scale, z1 * scale];
                scale *= (b0 + b1 + b2) / (1.0 + a1 + a2);
                zi
            })
            .collect()
    }

    /// Causal filtering (transposed direct form II), optionally from given
    /// section states.
    pub fn filter(&self, x: &[f64], zi: Option<&[[f64; 2]]>) -> Vec<f64> {
        let mut y = x.to_vec();
        for (k, s) in self.sections.iter().enumerate() {
            let [b0, b1, b2, _, a1, a2] = *s;
            let [mut z0, mut z1] = zi.map_or([0.0, 0.0], |zi| zi[k]);
            for v in y.iter_mut() {
                let xin = *v;
                let out = b0 * xin + z0;
                z0 = b1 * xin - a1 * out + z1;
                z1 = b2 * xin - a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Edge padding used by [`Sos::filtfilt`].
    pub fn pad_len(&self) -> usize {
        let b2_zero = self.sections.iter().filter(|s| s[2] == 0.0).count();
        let a2_zero = self.sections.iter().filter(|s| s[5] == 0.0).count();
        3 * (2 * self.sections.len() + 1 - b2_zero.min(a2_zero))
    }

    /// Zero-phase forward-backward filtering.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        if x.len() <= pad {
            return Err(Error::LengthMismatch(format!(
                "{} samples is too short for zero-phase filtering (needs more than {pad})",
                x.len()
            )));
        }
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.steady_state();
        let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();
        let mut y = self.filter(&ext, Some(&scaled(ext[0])));
        y.reverse();
        let mut y = self.filter(&y, Some(&scaled(y[0])));
        y.reverse();
        Ok(y[pad..pad + n].to_vec())
    }
}

/// Groups roots into monic polynomials `[1, c1, c2]`: conjugate pairs, then
/// real roots two at a time, with a leftover real root as `[1, -r, 0]`.
/// The second element of each tuple is the largest root magnitude.
fn quadratics(roots: &[Complex64]) -> Vec<([f64; 3], f64)> {
    const TOL: f64 = 1e-10;
    let mut complex: Vec<Complex64> = roots.iter().filter(|r| r.im > TOL).copied().collect();
    let mut reals: Vec<f64> = roots.iter().filter(|r| r.im.abs() <= TOL).map(|r| r.re).collect();
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    reals.sort_by(f64::total_cmp);
    let mut out: Vec<([f64; 3], f64)> = complex
        .iter()
        .map(|r| ([1.0, -2.0 * r.re, r.norm_sqr()], r.norm()))
        .collect();
    let mut pairs = reals.chunks(2);
    for pair in &mut pairs {
        match *pair {
            [a, b] => out.push(([1.0, -(a + b), a * b], a.abs().max(b.abs()))),
            [a] => out.push(([1.0, -a, 0.0], a.abs())),
            _ => unreachable!(),
        }
    }
    out
}

pub fn bandpass(x: &[f64], low_hz: f64, high_hz: f64, fs: f64) -> Result<Vec<f64>> {
    Sos::butterworth(BUTTERWORTH_ORDER, Band::Bandpass(low_hz, high_hz), fs)?.filtfilt(x)
}

pub fn lowpass(x: &[f64], cut_hz: f64, fs: f64) -> Result<Vec<f64>> {
    Sos::butterworth(BUTTERWORTH_ORDER, Band::Lowpass(cut_hz), fs)?.filtfilt(x)
}

pub fn notch(x: &[f64], freq_hz: f64, fs: f64) -> Result<Vec<f64>> {
    Sos::notch(freq_hz, NOTCH_Q, fs)?.filtfilt(x)
}

/// Integer decimation factor from `from_hz` to `to_hz`.
pub fn decimation_factor(from_hz: f64, to_hz: f64) -> Result<usize> {
    if !(to_hz > 0.0 && from_hz > 0.0) {
        return Err(Error::InvalidBand(format!("sampling rates must be positive, got {from_hz} and {to_hz}")));
    }
    if to_hz > from_hz {
        return Err(Error::UpsamplingUnsupported { from: from_hz, to: to_hz });
    }
    let ratio = from_hz / to_hz;
    let factor = ratio.round();
    if (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::NonIntegerFactor { from: from_hz, to: to_hz });
    }
    Ok(factor as usize)
}

/// Anti-alias low-pass at `0.45 * to_hz`, then keep every `factor`-th
/// sample. Output length is `floor(len * to_hz / from_hz)`.
pub fn resample(x: &[f64], from_hz: f64, to_hz: f64) -> Result<Vec<f64>> {
    let factor = decimation_factor(from_hz, to_hz)?;
    if factor == 1 {
        return Ok(x.to_vec());
    }
    let smooth = lowpass(x, ANTI_ALIAS_FRACTION * to_hz, from_hz)?;
    Ok(smooth.iter().step_by(factor).take(x.len() / factor).copied().collect())
}
