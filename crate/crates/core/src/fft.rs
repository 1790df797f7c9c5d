//! Thin wrappers over `rustfft` for 1D and 2D transforms.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Unnormalized forward DFT, `X_k = sum_j x_j e^{-2 pi i jk/n}`.
pub fn forward(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(data.len()).process(data);
}

/// Inverse DFT including the `1/n` factor.
pub fn inverse(data: &mut [Complex64]) {
    let n = data.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(data);
    let scale = 1.0 / n as f64;
    data.iter_mut().for_each(|z| *z *= scale);
}

/// 2D transform of a row-major `rows x cols` array.
pub fn forward_2d(data: &mut [Complex64], rows: usize, cols: usize) {
    transform_2d(data, rows, cols, false);
}

pub fn inverse_2d(data: &mut [Complex64], rows: usize, cols: usize) {
    transform_2d(data, rows, cols, true);
}

fn transform_2d(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    assert_eq!(data.len(), rows * cols);
    let mut planner = FftPlanner::new();
    let row_fft = if inverse { planner.plan_fft_inverse(cols) } else { planner.plan_fft_forward(cols) };
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = if inverse { planner.plan_fft_inverse(rows) } else { planner.plan_fft_forward(rows) };
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
    if inverse {
        let scale = 1.0 / (rows * cols) as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Linear convolution of two real sequences via zero-padded FFT.
pub fn linear_convolve_1d(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let m = out_len.next_power_of_two();
    let mut fa: Vec<Complex64> = pad(a, m);
    let mut fb: Vec<Complex64> = pad(b, m);
    forward(&mut fa);
    forward(&mut fb);
    fa.iter_mut().zip(&fb).for_each(|(x, y)| *x *= y);
    inverse(&mut fa);
    fa.truncate(out_len);
    fa.into_iter().map(|z| z.re).collect()
}

/// Linear 2D convolution of row-major square arrays of sides `na` and `nb`.
pub fn linear_convolve_2d(a: &[f64], na: usize, b: &[f64], nb: usize) -> (Vec<f64>, usize) {
    let out = na + nb - 1;
    let m = out.next_power_of_two();
    let embed = |src: &[f64], n: usize| {
        let mut v = vec![Complex64::new(0.0, 0.0); m * m];
        for r in 0..n {
            for c in 0..n {
                v[r * m + c] = Complex64::new(src[r * n + c], 0.0);
            }
        }
        v
    };
    let mut fa = embed(a, na);
    let mut fb = embed(b, nb);
    forward_2d(&mut fa, m, m);
    forward_2d(&mut fb, m, m);
    fa.iter_mut().zip(&fb).for_each(|(x, y)| *x *= y);
    inverse_2d(&mut fa, m, m);
    let mut res = vec![0.0; out * out];
    for r in 0..out {
        for c in 0..out {
            res[r * out + c] = fa[r * m + c].re;
        }
    }
    (res, out)
}

fn pad(x: &[f64], m: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = x.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    v.resize(m, Complex64::new(0.0, 0.0));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let x: Vec<Complex64> = (0..64).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64).cos())).collect();
        let mut y = x.clone();
        forward(&mut y);
        inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut z = x.clone();
        forward_2d(&mut z, 8, 8);
        inverse_2d(&mut z, 8, 8);
        for (a, b) in x.iter().zip(&z) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let a = [1.0, 2.0, -1.0, 0.5];
        let b = [0.25, -3.0, 2.0];
        let c = linear_convolve_1d(&a, &b);
        for (k, ck) in c.iter().enumerate() {
            let direct: f64 = (0..a.len())
                .filter(|&i| k >= i && k - i < b.len())
                .map(|i| a[i] * b[k - i])
                .sum();
            assert!((ck - direct).abs() < 1e-12);
        }
    }
}
