use crate::chain::SpectrumTrace;
use crate::constants::linear_to_db;
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions};

/// Minimum peak-to-median ratio, dB, for a spectrum to count as peaked.
pub const MIN_CONTRAST_DB: f64 = 3.0;

/// Lorentzian-plus-constant fit in linear power units (mW per bin).
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianFit {
    /// Hz.
    pub center: f64,
    /// Full width at half maximum, Hz.
    pub fwhm: f64,
    /// Peak height above the floor, dB.
    pub peak_db: f64,
    /// Constant floor, mW per bin.
    pub floor: f64,
    /// Lorentzian height above the floor, mW per bin.
    pub amplitude: f64,
    pub sigma_center: f64,
    pub sigma_fwhm: f64,
}

impl LorentzianFit {
    /// Fitted power at `f`, mW per bin.
    pub fn eval(&self, f: f64) -> f64 {
        self.floor + self.amplitude * self.shape(f)
    }

    /// Normalised Lorentzian (1 at the center).
    pub fn shape(&self, f: f64) -> f64 {
        let x = 2.0 * (f - self.center) / self.fwhm;
        1.0 / (1.0 + x * x)
    }
}

pub fn fit_lorentzian_gain(spectrum: &SpectrumTrace) -> Result<LorentzianFit> {
    fit_lorentzian_gain_masked(spectrum, &[])
}

/// As [`fit_lorentzian_gain`], ignoring the bins whose indices are listed in
/// `masked` (pilot spikes, pump leakage).
pub fn fit_lorentzian_gain_masked(spectrum: &SpectrumTrace, masked: &[usize]) -> Result<LorentzianFit> {
    let (f, p): (Vec<f64>, Vec<f64>) = spectrum
        .frequencies()
        .iter()
        .zip(spectrum.psd_dbm())
        .enumerate()
        .filter(|(i, _)| !masked.contains(i))
        .map(|(_, (&f, &db))| (f, 10f64.powf(db / 10.0)))
        .unzip();
    if f.len() < 5 {
        return Err(Error::Argument("fewer than 5 unmasked bins".into()));
    }
    let mut sorted = p.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let floor0 = sorted[sorted.len() / 2];
    let (imax, &pmax) = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let contrast = linear_to_db(pmax / floor0);
    if !(contrast >= MIN_CONTRAST_DB) {
        return Err(Error::LowContrast(format!(
            "peak only {contrast:.2} dB above the median floor"
        )));
    }

    let half = floor0 + 0.5 * (pmax - floor0);
    let left = (0..imax).rev().find(|&i| p[i] < half).map_or(f[0], |i| f[i]);
    let right = (imax + 1..f.len())
        .find(|&i| p[i] < half)
        .map_or(f[f.len() - 1], |i| f[i]);
    let width = f[f.len() - 1] - f[0];
    let f_ref = f[imax];

    let residuals = |q: &[f64]| -> Vec<f64> {
        f.iter()
            .zip(&p)
            .map(|(&fi, &pi)| {
                let x = 2.0 * ((fi - f_ref) / width - q[2]) / q[3];
                (q[0] + q[1] / (1.0 + x * x)) - pi / pmax
            })
            .collect()
    };
    let p0 = [
        floor0 / pmax,
        (pmax - floor0) / pmax,
        0.0,
        ((right - left) / width).max(1e-6),
    ];
    let opts = LmOptions {
        lower: Some(vec![0.0, 0.0, f64::NEG_INFINITY, 1e-12]),
        ..LmOptions::default()
    };
    let fit = levenberg_marquardt(residuals, &p0, &opts)?;
    let q = &fit.params;
    if q[0] <= 0.0 {
        return Err(Error::FitRejected("fitted floor is not positive".into()));
    }
    Ok(LorentzianFit {
        center: f_ref + q[2] * width,
        fwhm: q[3] * width,
        peak_db: linear_to_db((q[0] + q[1]) / q[0]),
        floor: q[0] * pmax,
        amplitude: q[1] * pmax,
        sigma_center: fit.sigma(2) * width,
        sigma_fwhm: fit.sigma(3) * width,
    })
}
