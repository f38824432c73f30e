//! Internal multidimensional FFT helpers on cubic row-major lattices.
//!
//! Convention: the forward transform is unnormalized, the inverse carries the
//! full 1/M^N factor, and mode k of an axis with M points maps to the
//! frequency xi = k/L with k in [-M/2, M/2).

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// In-place forward DFT over an `n`-dimensional cube with `m` points per axis.
pub(crate) fn fft_forward_cube(m: usize, n: usize, data: &mut [Complex<f64>]) {
    fft_cube(m, n, data, false);
}

/// In-place inverse DFT (with the 1/m^n normalization applied).
pub(crate) fn fft_inverse_cube(m: usize, n: usize, data: &mut [Complex<f64>]) {
    fft_cube(m, n, data, true);
    let scale = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

fn fft_cube(m: usize, n: usize, data: &mut [Complex<f64>], inverse: bool) {
    debug_assert_eq!(data.len(), m.pow(n as u32));
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };

    // Last axis is contiguous: rustfft processes every m-chunk in one call.
    plan.process(data);

    // Remaining axes via gather/scatter of strided lanes.
    let mut lane = vec![Complex::default(); m];
    for axis in 0..n.saturating_sub(1) {
        let stride = m.pow((n - 1 - axis) as u32);
        let block = stride * m;
        for base0 in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = base0 + inner;
                for (t, slot) in lane.iter_mut().enumerate() {
                    *slot = data[base + t * stride];
                }
                plan.process(&mut lane);
                for (t, slot) in lane.iter().enumerate() {
                    data[base + t * stride] = *slot;
                }
            }
        }
    }
}

/// Signed integer mode for index `i` on an axis with `m` points, in [-m/2, m/2).
#[inline]
pub(crate) fn mode(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_round_trip() {
        let m = 8usize;
        for n in [2usize, 3] {
            let total = m.pow(n as u32);
            let orig: Vec<Complex<f64>> = (0..total)
                .map(|i| Complex::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
                .collect();
            let mut data = orig.clone();
            fft_forward_cube(m, n, &mut data);
            fft_inverse_cube(m, n, &mut data);
            for (a, b) in data.iter().zip(&orig) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_mode_transform() {
        // u_j = exp(2 pi i j k0 / m) along the last axis has a lone spectral peak.
        let m = 16;
        let k0 = 3usize;
        let mut data: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * (j * k0) as f64 / m as f64)
            })
            .collect();
        fft_forward_cube(m, 1, &mut data);
        for (k, v) in data.iter().enumerate() {
            let expect = if k == k0 { m as f64 } else { 0.0 };
            assert!((v.norm() - expect).abs() < 1e-9, "k={k}: {v}");
        }
    }

    #[test]
    fn mode_range() {
        assert_eq!(mode(0, 8), 0);
        assert_eq!(mode(3, 8), 3);
        assert_eq!(mode(4, 8), -4);
        assert_eq!(mode(7, 8), -1);
    }
}
