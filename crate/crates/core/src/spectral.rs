//! Trigonometric differentiation and interpolation of samples taken at
//! equispaced parameters `t_k = 2πk/n` on a closed curve.

use num_complex::Complex64;
use rustfft::FftPlanner;

fn forward(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse(mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
    let n = coeffs.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut coeffs);
    let s = 1.0 / n as f64;
    coeffs.iter_mut().for_each(|c| *c *= s);
    coeffs
}

/// Signed wavenumber of FFT bin `k` for length `n`; the Nyquist bin maps to `None`.
fn wavenumber(k: usize, n: usize) -> Option<f64> {
    if n % 2 == 0 && k == n / 2 {
        None
    } else if k <= n / 2 {
        Some(k as f64)
    } else {
        Some(k as f64 - n as f64)
    }
}

/// `order`-th derivative with respect to the parameter `t ∈ [0, 2π)`.
pub fn derivative_complex(values: &[Complex64], order: u32) -> Vec<Complex64> {
    let n = values.len();
    if n == 0 || order == 0 {
        return values.to_vec();
    }
    let mut c = forward(values);
    for (k, ck) in c.iter_mut().enumerate() {
        match wavenumber(k, n) {
            Some(m) => *ck *= Complex64::new(0.0, m).powu(order),
            None => *ck = Complex64::new(0.0, 0.0),
        }
    }
    inverse(c)
}

/// Real-valued version of [`derivative_complex`].
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    derivative_complex(&z, order).into_iter().map(|c| c.re).collect()
}

/// Resample a periodic signal from `values.len()` to `m` equispaced points
/// by zero-padding (or truncating) its Fourier coefficients.
pub fn resample_complex(values: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = values.len();
    if n == m {
        return values.to_vec();
    }
    let c = forward(values);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let half = n.min(m) / 2;
    for k in 0..n {
        let Some(w) = wavenumber(k, n) else {
            // split the Nyquist coefficient symmetrically
            if m > n {
                out[half] += c[k] * 0.5;
                out[m - half] += c[k] * 0.5;
            }
            continue;
        };
        let w = w as i64;
        if w.unsigned_abs() as usize > half || (m % 2 == 0 && w.unsigned_abs() as usize == m / 2) {
            continue;
        }
        let idx = if w >= 0 { w as usize } else { (m as i64 + w) as usize };
        out[idx] += c[k];
    }
    let scale = m as f64 / n as f64;
    inverse(out).into_iter().map(|v| v * scale).collect()
}

pub fn resample(values: &[f64], m: usize) -> Vec<f64> {
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    resample_complex(&z, m).into_iter().map(|c| c.re).collect()
}
