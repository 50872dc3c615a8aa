//! Single-waveform primitives: RMS, form factor and single-bin Fourier
//! projections.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Magnitudes below this are treated as an absent signal.
pub const DEGENERATE_FLOOR: f64 = 1e-9;

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn mean_abs(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64
}

/// RMS divided by mean absolute value.
pub fn form_factor(x: &[f64]) -> Result<f64> {
    let ma = mean_abs(x);
    let r = rms(x);
    if ma <= DEGENERATE_FLOOR || r <= DEGENERATE_FLOOR {
        return Err(Error::DegenerateSignal(format!(
            "form factor undefined: mean |x| = {ma:e}"
        )));
    }
    Ok(r / ma)
}

/// Number of samples spanning the largest whole number of mains cycles.
pub fn whole_cycle_len(n: usize, f0: f64, fs: f64) -> Result<usize> {
    let spc = fs / f0;
    let cycles = (n as f64 / spc + 1e-9).floor();
    if cycles < 1.0 {
        return Err(Error::InsufficientData(format!(
            "{n} samples is less than one cycle of {f0} Hz at {fs} Hz"
        )));
    }
    Ok(((cycles * spc).round() as usize).min(n))
}

/// DFT coefficient of `x` at frequency `freq`, computed with the Goertzel
/// recurrence and phase-corrected so that `x[n] = A cos(ωn + φ)` yields
/// `A·N/2·e^{jφ}` over whole periods.
pub fn goertzel(x: &[f64], freq: f64, fs: f64) -> Complex64 {
    let n = x.len();
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let w = 2.0 * PI * freq / fs;
    let coeff = 2.0 * w.cos();
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for &v in x {
        let s0 = v + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    // y = s[N-1] - e^{-jω} s[N-2];  X = e^{-jω(N-1)} y
    let y = Complex64::new(s1 - w.cos() * s2, w.sin() * s2);
    y * Complex64::from_polar(1.0, -w * (n - 1) as f64)
}

/// Wrap an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Fundamental phasors of current and voltage over whole cycles.
pub(crate) fn fundamental_phasors(
    i: &[f64],
    v: &[f64],
    f0: f64,
    fs: f64,
) -> Result<(Complex64, Complex64)> {
    if i.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: i.len(),
            right: v.len(),
        });
    }
    let n = whole_cycle_len(i.len(), f0, fs)?;
    let ip = goertzel(&i[..n], f0, fs);
    let vp = goertzel(&v[..n], f0, fs);
    let scale = 2.0_f64.sqrt() / n as f64;
    if vp.norm() * scale <= DEGENERATE_FLOOR {
        return Err(Error::DegenerateSignal("voltage has no fundamental".into()));
    }
    if ip.norm() * scale <= DEGENERATE_FLOOR {
        return Err(Error::DegenerateSignal("current has no fundamental".into()));
    }
    Ok((ip, vp))
}

/// Phase of the current fundamental minus phase of the voltage fundamental,
/// wrapped to (−π, π]. A lagging current gives a negative value.
pub fn fundamental_phase_shift(i: &[f64], v: &[f64], f0: f64, fs: f64) -> Result<f64> {
    let (ip, vp) = fundamental_phasors(i, v, f0, fs)?;
    Ok(wrap_angle(ip.arg() - vp.arg()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(n: usize, amp: f64, f0: f64, fs: f64, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|k| amp * (2.0 * PI * f0 * k as f64 / fs + phase).sin())
            .collect()
    }

    #[test]
    fn form_factor_of_sine_and_square() {
        let s = sine(14_000, 3.7, 50.0, 14_000.0, 0.0);
        let expected = PI / (2.0 * 2.0_f64.sqrt());
        assert!((form_factor(&s).unwrap() - expected).abs() < 1e-3);
        let sq: Vec<f64> = (0..1000).map(|k| if (k / 50) % 2 == 0 { 2.0 } else { -2.0 }).collect();
        assert!((form_factor(&sq).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(form_factor(&[0.0; 64]), Err(Error::DegenerateSignal(_))));
    }

    #[test]
    fn goertzel_matches_direct_dft() {
        let fs = 1000.0;
        let x: Vec<f64> = (0..200)
            .map(|k| (k as f64 * 0.37).sin() + 0.3 * (k as f64 * 0.05).cos())
            .collect();
        let f = 50.0;
        let direct: Complex64 = x
            .iter()
            .enumerate()
            .map(|(n, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * f * n as f64 / fs))
            .sum();
        let g = goertzel(&x, f, fs);
        assert!((g - direct).norm() < 1e-9, "{g} vs {direct}");
    }

    #[test]
    fn phase_shift_cases() {
        let (f0, fs) = (50.0, 14_000.0);
        let v = sine(2800, 325.0, f0, fs, 0.0);
        assert!(fundamental_phase_shift(&v, &v, f0, fs).unwrap().abs() < 1e-9);
        // quarter-period delay of the current
        let i = sine(2800, 10.0, f0, fs, -PI / 2.0);
        let ps = fundamental_phase_shift(&i, &v, f0, fs).unwrap();
        assert!((ps + PI / 2.0).abs() < 1e-6, "{ps}");
        let i10: Vec<f64> = i.iter().map(|x| 10.0 * x).collect();
        assert!((fundamental_phase_shift(&i10, &v, f0, fs).unwrap() - ps).abs() < 1e-12);
        // antisymmetry
        let back = fundamental_phase_shift(&v, &i, f0, fs).unwrap();
        assert!((wrap_angle(back + ps)).abs() < 1e-9);
    }

    #[test]
    fn phase_shift_truncates_to_whole_cycles() {
        let (f0, fs) = (50.0, 14_000.0);
        let v = sine(2800 + 97, 325.0, f0, fs, 0.0);
        let i = sine(2800 + 97, 5.0, f0, fs, 0.4);
        let ps = fundamental_phase_shift(&i, &v, f0, fs).unwrap();
        assert!((ps - 0.4).abs() < 1e-9);
        assert!(fundamental_phase_shift(&i[..100], &v[..100], f0, fs).is_err());
    }

    #[test]
    fn phase_shift_degenerate() {
        let (f0, fs) = (50.0, 14_000.0);
        let v = sine(2800, 325.0, f0, fs, 0.0);
        let zero = vec![0.0; 2800];
        assert!(matches!(
            fundamental_phase_shift(&zero, &v, f0, fs),
            Err(Error::DegenerateSignal(_))
        ));
        assert!(matches!(
            fundamental_phase_shift(&v, &zero, f0, fs),
            Err(Error::DegenerateSignal(_))
        ));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}
