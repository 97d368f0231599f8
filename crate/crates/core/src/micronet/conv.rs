//! Same-size convolution with edge-replicated padding, via im2col + GEMM.
//! Activations are channel-first (`C x H x W`).

use super::scalar::Scalar;
use super::{Activation, ConvSpec};

/// Copies `src` shifted by `d` columns into `dst`, replicating the edges.
#[inline]
fn shifted_row<T: Copy>(src: &[T], d: isize, dst: &mut [T]) {
    let w = src.len();
    let s = d.unsigned_abs();
    if s >= w {
        let v = if d < 0 { src[0] } else { src[w - 1] };
        dst.fill(v);
    } else if d < 0 {
        dst[..s].fill(src[0]);
        dst[s..].copy_from_slice(&src[..w - s]);
    } else {
        dst[..w - s].copy_from_slice(&src[s..]);
        dst[w - s..].fill(src[w - 1]);
    }
}

/// Adjoint of [`shifted_row`]: accumulates `g` back onto `dst`.
#[inline]
fn unshift_row_add<T: Scalar>(g: &[T], d: isize, dst: &mut [T]) {
    let w = dst.len();
    let s = d.unsigned_abs();
    if s >= w {
        let total = g.iter().copied().sum::<T>();
        let i = if d < 0 { 0 } else { w - 1 };
        dst[i] += total;
    } else if d < 0 {
        dst[0] += g[..s].iter().copied().sum::<T>();
        for (o, &v) in dst[..w - s].iter_mut().zip(&g[s..]) {
            *o += v;
        }
    } else {
        for (o, &v) in dst[s..].iter_mut().zip(&g[..w - s]) {
            *o += v;
        }
        dst[w - 1] += g[w - s..].iter().copied().sum::<T>();
    }
}

#[inline]
fn clamp_row(y: usize, dy: isize, h: usize) -> usize {
    (y as isize + dy).clamp(0, h as isize - 1) as usize
}

/// Rows `(ci * k + ky) * k + kx`, columns `y * w + x`.
pub(crate) fn im2col<T: Scalar>(x: &[T], cin: usize, h: usize, w: usize, k: usize, col: &mut Vec<T>) {
    let hw = h * w;
    let half = (k / 2) as isize;
    col.clear();
    col.resize(cin * k * k * hw, T::zero());
    for ci in 0..cin {
        let plane = &x[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let dst = &mut col[((ci * k + ky) * k + kx) * hw..][..hw];
                for (y, out) in dst.chunks_exact_mut(w).enumerate() {
                    let sy = clamp_row(y, ky as isize - half, h);
                    shifted_row(&plane[sy * w..(sy + 1) * w], kx as isize - half, out);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the input.
pub(crate) fn col2im<T: Scalar>(col: &[T], cin: usize, h: usize, w: usize, k: usize, dx: &mut [T]) {
    let hw = h * w;
    let half = (k / 2) as isize;
    dx.iter_mut().for_each(|v| *v = T::zero());
    for ci in 0..cin {
        let plane = &mut dx[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let src = &col[((ci * k + ky) * k + kx) * hw..][..hw];
                for (y, g) in src.chunks_exact(w).enumerate() {
                    let sy = clamp_row(y, ky as isize - half, h);
                    unshift_row_add(g, kx as isize - half, &mut plane[sy * w..(sy + 1) * w]);
                }
            }
        }
    }
}

/// Forward pass of one layer. Fills `col` (kept for the backward pass) and
/// returns the post-activation output.
pub(crate) fn conv_forward<T: Scalar>(
    spec: &ConvSpec,
    weight: &[T],
    bias: &[T],
    x: &[T],
    h: usize,
    w: usize,
    col: &mut Vec<T>,
) -> Vec<T> {
    let hw = h * w;
    im2col(x, spec.in_channels, h, w, spec.kernel, col);
    let mut out = vec![T::zero(); spec.out_channels * hw];
    for (co, row) in out.chunks_exact_mut(hw).enumerate() {
        row.iter_mut().for_each(|v| *v = bias[co]);
    }
    T::gemm(spec.out_channels, spec.fan_in(), hw, weight, false, col, false, T::one(), &mut out);
    if spec.activation == Activation::Relu {
        out.iter_mut().for_each(|v| {
            if *v < T::zero() {
                *v = T::zero()
            }
        });
    }
    out
}

/// Backward pass of one layer.
///
/// `dout` is the gradient w.r.t. the post-activation output and is turned
/// into the pre-activation gradient in place. Weight and bias gradients are
/// accumulated; the input gradient is returned when `need_dx`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward<T: Scalar>(
    spec: &ConvSpec,
    weight: &[T],
    col: &[T],
    out: &[T],
    dout: &mut [T],
    h: usize,
    w: usize,
    dweight: &mut [T],
    dbias: &mut [T],
    need_dx: bool,
) -> Option<Vec<T>> {
    let hw = h * w;
    if spec.activation == Activation::Relu {
        for (g, &o) in dout.iter_mut().zip(out) {
            if o <= T::zero() {
                *g = T::zero();
            }
        }
    }
    for (co, row) in dout.chunks_exact(hw).enumerate() {
        dbias[co] += row.iter().copied().sum::<T>();
    }
    // dW += dZ * col^T
    T::gemm(spec.out_channels, hw, spec.fan_in(), dout, false, col, true, T::one(), dweight);
    if !need_dx {
        return None;
    }
    // dcol = W^T * dZ
    let mut dcol = vec![T::zero(); spec.fan_in() * hw];
    T::gemm(spec.fan_in(), spec.out_channels, hw, weight, true, dout, false, T::zero(), &mut dcol);
    let mut dx = vec![T::zero(); spec.in_channels * hw];
    col2im(&dcol, spec.in_channels, h, w, spec.kernel, &mut dx);
    Some(dx)
}
