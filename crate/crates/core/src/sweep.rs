//! Wavelength sweeps of `α∞` and resonance (peak) detection.
//!
//! Operators, the spectral decomposition and the modal couplings depend on
//! the geometry only; they are computed once and shared by every wavelength.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ParticleBoundary;
use crate::impedance::{
    alpha_inf_direct, alpha_inf_from_couplings, mode_couplings, DrudeParams, MaterialState, ModeCoupling,
};
use crate::operators::{eigendecompose, PeriodicOperators, SpectralDecomposition};

/// Equispaced wavelength grid in nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub count: usize,
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self {
            start_nm: 300.0,
            stop_nm: 1500.0,
            count: 241,
        }
    }
}

impl WavelengthGrid {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::config("sweep.count", "must be at least 2"));
        }
        if !(self.start_nm > 0.0 && self.stop_nm > self.start_nm && self.stop_nm.is_finite()) {
            return Err(Error::config("sweep", "wavelength grid must be strictly increasing and positive"));
        }
        Ok(())
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        let step = (self.stop_nm - self.start_nm) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop_nm
                } else {
                    self.start_nm + step * i as f64
                }
            })
            .collect()
    }

    pub fn step_nm(&self) -> f64 {
        (self.stop_nm - self.start_nm) / (self.count - 1) as f64
    }
}

/// Geometry-dependent data shared across a sweep.
#[derive(Debug, Clone)]
pub struct PreparedGeometry {
    pub boundary: ParticleBoundary,
    pub ops: PeriodicOperators,
    pub spectrum: SpectralDecomposition,
    pub couplings: Vec<ModeCoupling>,
}

impl PreparedGeometry {
    pub fn new(boundary: ParticleBoundary) -> Result<Self> {
        let ops = PeriodicOperators::assemble(&boundary)?;
        let spectrum = eigendecompose(&ops)?;
        let couplings = mode_couplings(&spectrum, &boundary);
        Ok(Self {
            boundary,
            ops,
            spectrum,
            couplings,
        })
    }
}

/// One wavelength of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub wavelength_nm: f64,
    pub spectral_parameter: Complex64,
    /// Direct-solve value.
    pub alpha_inf: Complex64,
    /// Series value.
    pub alpha_spectral: Complex64,
    pub dominant_mode_index: usize,
    pub dominant_mode_lambda: f64,
}

impl SweepRow {
    pub fn impedance_z(&self) -> Complex64 {
        -self.alpha_inf
    }

    /// `|spectral − direct| / |direct|`.
    pub fn path_defect(&self) -> f64 {
        (self.alpha_spectral - self.alpha_inf).norm() / self.alpha_inf.norm()
    }
}

/// Per-wavelength outcome; a failure does not abort the sweep.
pub type SweepPoint = std::result::Result<SweepRow, (f64, Error)>;

fn evaluate(prep: &PreparedGeometry, drude: &DrudeParams, eps_c: Complex64, wl: f64) -> SweepPoint {
    let run = || -> Result<SweepRow> {
        let mat = MaterialState::drude(wl, drude, eps_c)?;
        let z = mat.spectral_parameter();
        let direct = alpha_inf_direct(&prep.ops, &prep.boundary, z)?;
        let series = alpha_inf_from_couplings(&prep.couplings, z);
        let (idx, lambda) = series.dominant_mode().unwrap_or((0, f64::NAN));
        Ok(SweepRow {
            wavelength_nm: wl,
            spectral_parameter: z,
            alpha_inf: direct.alpha_inf,
            alpha_spectral: series.alpha_inf,
            dominant_mode_index: idx,
            dominant_mode_lambda: lambda,
        })
    };
    run().map_err(|e| (wl, e))
}

/// Evaluate every wavelength in parallel (on the current rayon pool); rows
/// come back in grid order.
pub fn sweep(prep: &PreparedGeometry, wavelengths: &[f64], drude: &DrudeParams, eps_c: Complex64) -> Vec<SweepPoint> {
    wavelengths
        .par_iter()
        .map(|&wl| evaluate(prep, drude, eps_c, wl))
        .collect()
}

/// Serial version of [`sweep`].
pub fn sweep_serial(prep: &PreparedGeometry, wavelengths: &[f64], drude: &DrudeParams, eps_c: Complex64) -> Vec<SweepPoint> {
    wavelengths.iter().map(|&wl| evaluate(prep, drude, eps_c, wl)).collect()
}

/// A detected resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub wavelength_nm: f64,
    pub value: f64,
    pub prominence: f64,
    pub dominant_mode_index: usize,
    pub dominant_mode_lambda: f64,
}

/// Topographic prominence of the strict local maximum at `i`.
fn prominence(values: &[f64], i: usize) -> f64 {
    let v = values[i];
    let left = values[..i]
        .iter()
        .rev()
        .take_while(|&&x| x <= v)
        .fold(v, |m, &x| m.min(x));
    let right = values[i + 1..]
        .iter()
        .take_while(|&&x| x <= v)
        .fold(v, |m, &x| m.min(x));
    v - left.max(right)
}

/// Indices of samples exceeding both neighbours with prominence at least
/// `min_fraction` of the global maximum.
pub fn find_peaks(values: &[f64], min_fraction: f64) -> Vec<(usize, f64)> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 3 || !(max > 0.0) {
        return Vec::new();
    }
    (1..values.len() - 1)
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .map(|i| (i, prominence(values, i)))
        .filter(|&(_, p)| p >= min_fraction * max)
        .collect()
}

/// Peaks of `|α∞|` over the successful rows of a sweep.
pub fn sweep_peaks(rows: &[SweepRow], min_fraction: f64) -> Vec<Peak> {
    let mags: Vec<f64> = rows.iter().map(|r| r.alpha_inf.norm()).collect();
    find_peaks(&mags, min_fraction)
        .into_iter()
        .map(|(i, p)| Peak {
            index: i,
            wavelength_nm: rows[i].wavelength_nm,
            value: mags[i],
            prominence: p,
            dominant_mode_index: rows[i].dominant_mode_index,
            dominant_mode_lambda: rows[i].dominant_mode_lambda,
        })
        .collect()
}

/// Default prominence threshold for reported peaks.
pub const PEAK_PROMINENCE: f64 = 0.05;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = WavelengthGrid::default();
        let w = g.wavelengths();
        assert_eq!(w.len(), 241);
        assert_eq!(w[0], 300.0);
        assert_eq!(w[240], 1500.0);
        assert!((w[1] - 305.0).abs() < 1e-12);
        assert!(WavelengthGrid { count: 1, ..g }.validate().is_err());
        assert!(WavelengthGrid { start_nm: 900.0, stop_nm: 400.0, count: 5 }.validate().is_err());
    }

    #[test]
    fn peaks_and_prominence() {
        let v = [0.0, 1.0, 0.5, 3.0, 2.9, 2.95, 0.0, 0.2, 0.1];
        let all = find_peaks(&v, 0.0);
        let idx: Vec<usize> = all.iter().map(|p| p.0).collect();
        assert_eq!(idx, vec![1, 3, 5, 7]);
        let prom: Vec<f64> = all.iter().map(|p| p.1).collect();
        assert!((prom[0] - 0.5).abs() < 1e-15);
        assert!((prom[1] - 3.0).abs() < 1e-15);
        assert!((prom[2] - 0.05).abs() < 1e-12);
        assert!((prom[3] - 0.1).abs() < 1e-12);
        let big: Vec<usize> = find_peaks(&v, 0.05).iter().map(|p| p.0).collect();
        assert_eq!(big, vec![1, 3]);
        // monotone data has no interior peak
        assert!(find_peaks(&[3.0, 2.0, 1.0], 0.0).is_empty());
        assert!(find_peaks(&[1.0, 1.0, 1.0], 0.0).is_empty());
    }
}
