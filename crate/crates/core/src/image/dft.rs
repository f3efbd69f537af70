//! Separable 2-D discrete Fourier transform for small images.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    fn mul(self, o: C64) -> C64 {
        C64::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    #[cfg(test)]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

struct Twiddles(Vec<C64>);

impl Twiddles {
    fn new(n: usize, inverse: bool) -> Self {
        let sign = if inverse { 1.0 } else { -1.0 };
        Twiddles(
            (0..n)
                .map(|k| {
                    let a = sign * 2.0 * PI * k as f64 / n as f64;
                    C64::new(a.cos(), a.sin())
                })
                .collect(),
        )
    }

    fn apply(&self, input: &[C64], out: &mut [C64]) {
        let n = input.len();
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = C64::default();
            for (j, &x) in input.iter().enumerate() {
                let t = x.mul(self.0[(k * j) % n]);
                acc.re += t.re;
                acc.im += t.im;
            }
            *o = acc;
        }
    }
}

/// In-place 2-D DFT of a row-major `h × w` buffer. The inverse transform
/// includes the `1/(h·w)` normalization.
pub(crate) fn dft2(data: &mut [C64], h: usize, w: usize, inverse: bool) {
    let tw_row = Twiddles::new(w, inverse);
    let tw_col = Twiddles::new(h, inverse);
    let mut tmp = vec![C64::default(); w.max(h)];

    for row in data.chunks_exact_mut(w) {
        tw_row.apply(row, &mut tmp[..w]);
        row.copy_from_slice(&tmp[..w]);
    }
    let mut col = vec![C64::default(); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        tw_col.apply(&col, &mut tmp[..h]);
        for y in 0..h {
            data[y * w + x] = tmp[y];
        }
    }
    if inverse {
        let s = 1.0 / (h * w) as f64;
        for v in data.iter_mut() {
            v.re *= s;
            v.im *= s;
        }
    }
}

/// Signed normalized frequency of bin `k` in an `n`-point transform.
pub(crate) fn frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64 / n as f64
    } else {
        (k as f64 - n as f64) / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let (h, w) = (6, 4);
        let orig: Vec<C64> = (0..h * w)
            .map(|i| C64::new((i as f64 * 0.37).sin(), 0.0))
            .collect();
        let mut d = orig.clone();
        dft2(&mut d, h, w, false);
        dft2(&mut d, h, w, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a.re - b.re).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn dc_bin_is_sum() {
        let mut d: Vec<C64> = (0..12).map(|i| C64::new(i as f64, 0.0)).collect();
        dft2(&mut d, 3, 4, false);
        assert!((d[0].re - 66.0).abs() < 1e-9);
    }

    #[test]
    fn frequency_layout() {
        assert_eq!(frequency(0, 8), 0.0);
        assert_eq!(frequency(4, 8), 0.5);
        assert_eq!(frequency(5, 8), -0.375);
    }
}
