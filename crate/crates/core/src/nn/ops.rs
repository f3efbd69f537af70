//! Raw kernels behind the graph operations.

use super::{Real, Tensor};

/// Geometry of an NCHW convolution with a square kernel, stride 1 and
/// `k - 1` zero padding on the right and bottom (output keeps H × W).
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    pub n: usize,
    pub ci: usize,
    pub co: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
}

pub(crate) fn conv2d_forward<T: Real>(x: &[T], wt: &[T], b: &[T], g: ConvGeom) -> Vec<T> {
    let ConvGeom { n, ci, co, h, w, k } = g;
    let plane = h * w;
    let mut out = vec![T::zero(); n * co * plane];
    for img in 0..n {
        for o in 0..co {
            let op = &mut out[(img * co + o) * plane..][..plane];
            op.fill(b[o]);
            for c in 0..ci {
                let ip = &x[(img * ci + c) * plane..][..plane];
                for dy in 0..k.min(h) {
                    for dx in 0..k.min(w) {
                        let wv = wt[((o * ci + c) * k + dy) * k + dx];
                        for y in 0..h - dy {
                            let orow = &mut op[y * w..y * w + w - dx];
                            let irow = &ip[(y + dy) * w + dx..(y + dy) * w + w];
                            for (a, &v) in orow.iter_mut().zip(irow) {
                                *a += wv * v;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub(crate) fn conv2d_backward<T: Real>(
    x: &[T],
    wt: &[T],
    gout: &[T],
    g: ConvGeom,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let ConvGeom { n, ci, co, h, w, k } = g;
    let plane = h * w;
    let mut gx = vec![T::zero(); x.len()];
    let mut gw = vec![T::zero(); wt.len()];
    let mut gb = vec![T::zero(); co];
    for img in 0..n {
        for o in 0..co {
            let gp = &gout[(img * co + o) * plane..][..plane];
            gb[o] += gp.iter().copied().sum::<T>();
            for c in 0..ci {
                let base = (img * ci + c) * plane;
                for dy in 0..k.min(h) {
                    for dx in 0..k.min(w) {
                        let wi = ((o * ci + c) * k + dy) * k + dx;
                        let wv = wt[wi];
                        let mut acc = T::zero();
                        for y in 0..h - dy {
                            let grow = &gp[y * w..y * w + w - dx];
                            let off = base + (y + dy) * w + dx;
                            let irow = &x[off..off + w - dx];
                            for (&gv, &iv) in grow.iter().zip(irow) {
                                acc += gv * iv;
                            }
                            let gxrow = &mut gx[off..off + w - dx];
                            for (a, &gv) in gxrow.iter_mut().zip(grow) {
                                *a += wv * gv;
                            }
                        }
                        gw[wi] += acc;
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

/// 2×2 stride-2 max pooling. Returns the pooled values and, per output,
/// the flat input index of the first maximal element.
pub(crate) fn maxpool2_forward<T: Real>(
    x: &[T],
    planes: usize,
    h: usize,
    w: usize,
) -> (Vec<T>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(planes * oh * ow);
    let mut arg = Vec::with_capacity(out.capacity());
    for p in 0..planes {
        let base = p * h * w;
        for y in 0..oh {
            for xx in 0..ow {
                let i0 = base + 2 * y * w + 2 * xx;
                let mut best = i0;
                for i in [i0 + 1, i0 + w, i0 + w + 1] {
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    (out, arg)
}

/// `x (N×D) · w (D×K) + b`.
pub(crate) fn linear_forward<T: Real>(x: &[T], w: &[T], b: &[T], n: usize, d: usize, k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n * k);
    for r in 0..n {
        let mut row = b.to_vec();
        for (j, &xv) in x[r * d..(r + 1) * d].iter().enumerate() {
            if xv == T::zero() {
                continue;
            }
            for (a, &wv) in row.iter_mut().zip(&w[j * k..(j + 1) * k]) {
                *a += xv * wv;
            }
        }
        out.extend(row);
    }
    out
}

pub(crate) fn linear_backward<T: Real>(
    x: &[T],
    w: &[T],
    gout: &[T],
    n: usize,
    d: usize,
    k: usize,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut gx = vec![T::zero(); n * d];
    let mut gw = vec![T::zero(); d * k];
    let mut gb = vec![T::zero(); k];
    for r in 0..n {
        let grow = &gout[r * k..(r + 1) * k];
        for (a, &g) in gb.iter_mut().zip(grow) {
            *a += g;
        }
        for j in 0..d {
            let wrow = &w[j * k..(j + 1) * k];
            gx[r * d + j] = wrow.iter().zip(grow).map(|(&a, &b)| a * b).sum();
            let xv = x[r * d + j];
            if xv != T::zero() {
                for (a, &g) in gw[j * k..(j + 1) * k].iter_mut().zip(grow) {
                    *a += xv * g;
                }
            }
        }
    }
    (gx, gw, gb)
}

/// Row-wise softmax of an `N × C` tensor, log-sum-exp stabilized.
pub fn softmax_rows<T: Real>(logits: &Tensor<T>) -> Tensor<T> {
    let c = *logits.shape().last().unwrap_or(&1);
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(c.max(1)) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v = *v / s;
        }
    }
    out
}
