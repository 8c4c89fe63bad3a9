//! Spectral test. Uses the 0.95 peak threshold and the corrected variance
//! n * 0.95 * 0.05 / 4 for the count of peaks below it.

use rustfft::{num_complex::Complex, FftPlanner};

use super::special::erfc;
use super::{BitSequence, Computed, StsError};

/// Statistics: `[d, N1, N0, T]`.
pub fn dft(seq: &BitSequence) -> Result<Computed, StsError> {
    let n = seq.len();
    if n < 2 {
        return Err(StsError::SequenceTooShort {
            test: "dft".into(),
            n,
            required: 2,
        });
    }
    let mut buf: Vec<Complex<f64>> = seq
        .bits()
        .iter()
        .map(|&b| Complex::new(2.0 * f64::from(b) - 1.0, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let n0 = 0.95 * nf / 2.0;
    let n1 = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let d = (n1 - n0) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    let p = erfc(d.abs() / std::f64::consts::SQRT_2);
    Ok(Computed::new(vec![p], vec![d, n1, n0, threshold]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaks_match_naive_transform() {
        let seq = BitSequence::from_str01("1001010011").unwrap();
        let c = dft(&seq).unwrap();
        let x: Vec<f64> = seq.bits().iter().map(|&b| 2.0 * f64::from(b) - 1.0).collect();
        let n = x.len();
        let threshold = c.statistic[3];
        let below = (0..n / 2)
            .filter(|&k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (j, v) in x.iter().enumerate() {
                    let a = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                (re * re + im * im).sqrt() < threshold
            })
            .count();
        assert_eq!(c.statistic[1], below as f64);
    }

    #[test]
    fn periodic_input_fails() {
        let seq = BitSequence::from_bits((0..4096).map(|i| u8::from(i % 8 < 4)).collect());
        assert!(dft(&seq).unwrap().p_values[0] < 0.01);
    }
}
