//! Per-sample kernels. All buffers are flat row-major slices; shapes come
//! from the owning [`LayerPlan`](super::LayerPlan).

use super::Real;

pub(crate) struct ConvDims {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub o: usize,
    pub k: usize,
}

impl ConvDims {
    fn out_hw(&self) -> (usize, usize) {
        (self.h - self.k + 1, self.w - self.k + 1)
    }
}

pub(crate) fn conv2d_forward<F: Real>(
    d: &ConvDims,
    input: &[F],
    weights: &[F],
    bias: &[F],
    out: &mut [F],
) {
    let (oh, ow) = d.out_hw();
    for o in 0..d.o {
        let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
        plane.iter_mut().for_each(|v| *v = bias[o]);
        for c in 0..d.c {
            let src = &input[c * d.h * d.w..(c + 1) * d.h * d.w];
            for ky in 0..d.k {
                for kx in 0..d.k {
                    let wv = weights[((o * d.c + c) * d.k + ky) * d.k + kx];
                    for y in 0..oh {
                        let row = &src[(y + ky) * d.w + kx..(y + ky) * d.w + kx + ow];
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for (acc, &x) in dst.iter_mut().zip(row) {
                            *acc += wv * x;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates weight and bias gradients; writes the input gradient when
/// `grad_in` is given.
pub(crate) fn conv2d_backward<F: Real>(
    d: &ConvDims,
    input: &[F],
    weights: &[F],
    grad_out: &[F],
    grad_w: &mut [F],
    grad_b: &mut [F],
    mut grad_in: Option<&mut [F]>,
) {
    let (oh, ow) = d.out_hw();
    if let Some(gi) = grad_in.as_deref_mut() {
        gi.iter_mut().for_each(|v| *v = F::zero());
    }
    for o in 0..d.o {
        let g_plane = &grad_out[o * oh * ow..(o + 1) * oh * ow];
        if g_plane.iter().all(|g| g.is_zero()) {
            continue;
        }
        let mut sum = F::zero();
        for &g in g_plane {
            sum += g;
        }
        grad_b[o] += sum;
        for c in 0..d.c {
            let src = &input[c * d.h * d.w..(c + 1) * d.h * d.w];
            for ky in 0..d.k {
                for kx in 0..d.k {
                    let idx = ((o * d.c + c) * d.k + ky) * d.k + kx;
                    let mut acc = F::zero();
                    for y in 0..oh {
                        let row = &src[(y + ky) * d.w + kx..(y + ky) * d.w + kx + ow];
                        for (&g, &x) in g_plane[y * ow..(y + 1) * ow].iter().zip(row) {
                            acc += g * x;
                        }
                    }
                    grad_w[idx] += acc;
                    if let Some(gi) = grad_in.as_deref_mut() {
                        let wv = weights[idx];
                        let dst_plane = &mut gi[c * d.h * d.w..(c + 1) * d.h * d.w];
                        for y in 0..oh {
                            let dst = &mut dst_plane[(y + ky) * d.w + kx..(y + ky) * d.w + kx + ow];
                            for (acc, &g) in dst.iter_mut().zip(&g_plane[y * ow..(y + 1) * ow]) {
                                *acc += wv * g;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Index into `input` of the max of each pooling window (first max wins).
pub(crate) fn maxpool_argmax<F: Real>(
    input: &[F],
    c: usize,
    h: usize,
    w: usize,
    window: usize,
) -> impl Iterator<Item = usize> + '_ {
    let (oh, ow) = (h / window, w / window);
    (0..c).flat_map(move |ch| {
        (0..oh).flat_map(move |y| {
            (0..ow).map(move |x| {
                let mut best = ch * h * w + (y * window) * w + x * window;
                for dy in 0..window {
                    for dx in 0..window {
                        let i = ch * h * w + (y * window + dy) * w + x * window + dx;
                        if input[i] > input[best] {
                            best = i;
                        }
                    }
                }
                best
            })
        })
    })
}

pub(crate) fn linear_forward<F: Real>(
    input: &[F],
    weights: &[F],
    bias: &[F],
    out: &mut [F],
) {
    let n_in = input.len();
    for (o, y) in out.iter_mut().enumerate() {
        let row = &weights[o * n_in..(o + 1) * n_in];
        let mut acc = bias[o];
        for (&w, &x) in row.iter().zip(input) {
            acc += w * x;
        }
        *y = acc;
    }
}

pub(crate) fn linear_backward<F: Real>(
    input: &[F],
    weights: &[F],
    grad_out: &[F],
    grad_w: &mut [F],
    grad_b: &mut [F],
    mut grad_in: Option<&mut [F]>,
) {
    let n_in = input.len();
    if let Some(gi) = grad_in.as_deref_mut() {
        gi.iter_mut().for_each(|v| *v = F::zero());
    }
    for (o, &g) in grad_out.iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        grad_b[o] += g;
        let gw = &mut grad_w[o * n_in..(o + 1) * n_in];
        for (acc, &x) in gw.iter_mut().zip(input) {
            *acc += g * x;
        }
        if let Some(gi) = grad_in.as_deref_mut() {
            let row = &weights[o * n_in..(o + 1) * n_in];
            for (acc, &w) in gi.iter_mut().zip(row) {
                *acc += w * g;
            }
        }
    }
}
