//! Per-sample forward and backward kernels. Images are `[channels][rows][cols]`,
//! conv weights `[out][in][ky][kx]`, dense weights `[out][in]`.

pub(crate) fn pooled_len(input: usize, kernel: usize, stride: usize) -> Option<usize> {
    (input >= kernel).then(|| (input - kernel) / stride + 1)
}

pub(crate) struct ConvGeom {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

pub(crate) fn conv_forward(g: &ConvGeom, input: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let k = g.kernel;
    for o in 0..g.out_ch {
        let plane = &mut out[o * g.out_h * g.out_w..(o + 1) * g.out_h * g.out_w];
        plane.fill(bias[o]);
        for i in 0..g.in_ch {
            let src = &input[i * g.in_h * g.in_w..(i + 1) * g.in_h * g.in_w];
            let wk = &weights[(o * g.in_ch + i) * k * k..(o * g.in_ch + i + 1) * k * k];
            for y in 0..g.out_h {
                let row0 = y * g.stride;
                for x in 0..g.out_w {
                    let col0 = x * g.stride;
                    let mut acc = 0.0;
                    for ky in 0..k {
                        let srow = &src[(row0 + ky) * g.in_w + col0..(row0 + ky) * g.in_w + col0 + k];
                        let wrow = &wk[ky * k..(ky + 1) * k];
                        acc += srow.iter().zip(wrow).map(|(a, b)| a * b).sum::<f64>();
                    }
                    plane[y * g.out_w + x] += acc;
                }
            }
        }
    }
}

/// Accumulates parameter gradients (when requested) and writes the input gradient.
pub(crate) fn conv_backward(
    g: &ConvGeom,
    input: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    mut param_grads: Option<(&mut [f64], &mut [f64])>,
    grad_in: &mut [f64],
) {
    let k = g.kernel;
    grad_in.fill(0.0);
    for o in 0..g.out_ch {
        let gplane = &grad_out[o * g.out_h * g.out_w..(o + 1) * g.out_h * g.out_w];
        if let Some((_, gb)) = param_grads.as_mut() {
            gb[o] += gplane.iter().sum::<f64>();
        }
        for i in 0..g.in_ch {
            let base = (o * g.in_ch + i) * k * k;
            let src = &input[i * g.in_h * g.in_w..(i + 1) * g.in_h * g.in_w];
            let gsrc = &mut grad_in[i * g.in_h * g.in_w..(i + 1) * g.in_h * g.in_w];
            for y in 0..g.out_h {
                for x in 0..g.out_w {
                    let go = gplane[y * g.out_w + x];
                    if go == 0.0 {
                        continue;
                    }
                    let (row0, col0) = (y * g.stride, x * g.stride);
                    for ky in 0..k {
                        let off = (row0 + ky) * g.in_w + col0;
                        for kx in 0..k {
                            let widx = base + ky * k + kx;
                            if let Some((gw, _)) = param_grads.as_mut() {
                                gw[widx] += go * src[off + kx];
                            }
                            gsrc[off + kx] += go * weights[widx];
                        }
                    }
                }
            }
        }
    }
}

/// Max pooling; records the flat input index of each window maximum (first wins on ties).
pub(crate) fn maxpool_forward(
    ch: usize,
    (in_h, in_w): (usize, usize),
    (out_h, out_w): (usize, usize),
    kernel: usize,
    stride: usize,
    input: &[f64],
    out: &mut [f64],
    argmax: &mut [usize],
) {
    for c in 0..ch {
        for y in 0..out_h {
            for x in 0..out_w {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for ky in 0..kernel {
                    for kx in 0..kernel {
                        let idx = c * in_h * in_w + (y * stride + ky) * in_w + x * stride + kx;
                        if input[idx] > best {
                            best = input[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = c * out_h * out_w + y * out_w + x;
                out[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
}

pub(crate) fn dense_forward(in_dim: usize, input: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    for (o, slot) in out.iter_mut().enumerate() {
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        *slot = bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
    }
}

pub(crate) fn dense_backward(
    in_dim: usize,
    input: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    param_grads: Option<(&mut [f64], &mut [f64])>,
    grad_in: &mut [f64],
) {
    grad_in.fill(0.0);
    for (o, &go) in grad_out.iter().enumerate() {
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        for (gi, w) in grad_in.iter_mut().zip(row) {
            *gi += go * w;
        }
    }
    if let Some((gw, gb)) = param_grads {
        for (o, &go) in grad_out.iter().enumerate() {
            gb[o] += go;
            for (g, x) in gw[o * in_dim..(o + 1) * in_dim].iter_mut().zip(input) {
                *g += go * x;
            }
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Vector-Jacobian product of softmax given its output.
pub(crate) fn softmax_backward(probs: &[f64], grad_out: &[f64], grad_in: &mut [f64]) {
    let dot: f64 = probs.iter().zip(grad_out).map(|(p, g)| p * g).sum();
    for ((gi, p), g) in grad_in.iter_mut().zip(probs).zip(grad_out) {
        *gi = p * (g - dot);
    }
}
