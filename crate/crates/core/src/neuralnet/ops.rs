//! Layer primitives and their backward passes. All image tensors are NHWC;
//! convolution is cross-correlation (no kernel flip) with HWIO weights.

use rand::Rng;

use super::gemm::gemm;
use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Valid,
    /// Zero padding so that the output extent is `ceil(input / stride)`.
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Output extent and leading padding along one spatial axis.
pub fn conv_output_extent(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    if stride == 0 || kernel == 0 {
        return Err(Error::InvalidArgument("kernel and stride must be positive".into()));
    }
    match padding {
        Padding::Valid => {
            if kernel > input {
                return Err(Error::shape(format!("input extent >= {kernel}"), input));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Ok((out, total / 2))
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvGeometry {
    n: usize,
    h: usize,
    w: usize,
    cin: usize,
    kh: usize,
    kw: usize,
    cout: usize,
    stride: usize,
    pad_top: usize,
    pad_left: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeometry {
    fn new(input: &Tensor, weights: &Tensor, stride: usize, padding: Padding) -> Result<Self> {
        let (n, h, w, cin) = input.dims4()?;
        let (kh, kw, wcin, cout) = weights.dims4()?;
        if wcin != cin {
            return Err(Error::shape(format!("{wcin} input channels"), format!("{cin} channels")));
        }
        let (out_h, pad_top) = conv_output_extent(h, kh, stride, padding)?;
        let (out_w, pad_left) = conv_output_extent(w, kw, stride, padding)?;
        Ok(ConvGeometry {
            n,
            h,
            w,
            cin,
            kh,
            kw,
            cout,
            stride,
            pad_top,
            pad_left,
            out_h,
            out_w,
        })
    }

    fn patch_len(&self) -> usize {
        self.kh * self.kw * self.cin
    }

    fn out_pixels(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Output pixels per im2col block, keeping the block around 2 MB.
    fn chunk(&self) -> usize {
        (262_144 / self.patch_len()).clamp(1, self.out_pixels())
    }

    fn input_index(&self, oy: usize, ox: usize, ky: usize, kx: usize) -> Option<(usize, usize)> {
        let iy = (oy * self.stride + ky).checked_sub(self.pad_top)?;
        let ix = (ox * self.stride + kx).checked_sub(self.pad_left)?;
        (iy < self.h && ix < self.w).then_some((iy, ix))
    }

    fn im2col(&self, image: &[f64], p0: usize, p1: usize, patches: &mut [f64]) {
        let plen = self.patch_len();
        for p in p0..p1 {
            let (oy, ox) = (p / self.out_w, p % self.out_w);
            let row = &mut patches[(p - p0) * plen..(p - p0 + 1) * plen];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let dst = &mut row[(ky * self.kw + kx) * self.cin..][..self.cin];
                    match self.input_index(oy, ox, ky, kx) {
                        Some((iy, ix)) => dst.copy_from_slice(&image[(iy * self.w + ix) * self.cin..][..self.cin]),
                        None => dst.fill(0.0),
                    }
                }
            }
        }
    }

    fn col2im_add(&self, patches: &[f64], p0: usize, p1: usize, grad_image: &mut [f64]) {
        let plen = self.patch_len();
        for p in p0..p1 {
            let (oy, ox) = (p / self.out_w, p % self.out_w);
            let row = &patches[(p - p0) * plen..(p - p0 + 1) * plen];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    if let Some((iy, ix)) = self.input_index(oy, ox, ky, kx) {
                        let src = &row[(ky * self.kw + kx) * self.cin..][..self.cin];
                        let dst = &mut grad_image[(iy * self.w + ix) * self.cin..][..self.cin];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += s;
                        }
                    }
                }
            }
        }
    }
}

/// 2-d convolution: `weights` is `[kh, kw, in_channels, out_channels]`, `bias` is `[out_channels]`.
pub fn conv2d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor, stride: usize, padding: Padding) -> Result<Tensor> {
    let g = ConvGeometry::new(input, weights, stride, padding)?;
    if bias.len() != g.cout {
        return Err(Error::shape(format!("{} biases", g.cout), bias.len()));
    }
    let plen = g.patch_len();
    let chunk = g.chunk();
    let mut out = Tensor::zeros(&[g.n, g.out_h, g.out_w, g.cout]);
    let mut patches = vec![0.0; chunk * plen];
    let in_item = g.h * g.w * g.cin;
    let out_item = g.out_pixels() * g.cout;
    for s in 0..g.n {
        let image = &input.data()[s * in_item..(s + 1) * in_item];
        let dst = &mut out.data_mut()[s * out_item..(s + 1) * out_item];
        for row in dst.chunks_exact_mut(g.cout) {
            row.copy_from_slice(bias.data());
        }
        let mut p0 = 0;
        while p0 < g.out_pixels() {
            let p1 = (p0 + chunk).min(g.out_pixels());
            g.im2col(image, p0, p1, &mut patches);
            gemm(p1 - p0, plen, g.cout, &patches, false, weights.data(), false, &mut dst[p0 * g.cout..p1 * g.cout], 1.0);
            p0 = p1;
        }
    }
    Ok(out)
}

pub struct ConvGrads {
    pub input: Option<Tensor>,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn conv2d_backward(
    input: &Tensor,
    weights: &Tensor,
    stride: usize,
    padding: Padding,
    grad_out: &Tensor,
    want_input_grad: bool,
) -> Result<ConvGrads> {
    let g = ConvGeometry::new(input, weights, stride, padding)?;
    if grad_out.shape() != [g.n, g.out_h, g.out_w, g.cout] {
        return Err(Error::shape(
            format!("{:?}", [g.n, g.out_h, g.out_w, g.cout]),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let plen = g.patch_len();
    let chunk = g.chunk();
    let mut grad_w = Tensor::zeros(weights.shape());
    let mut grad_b = Tensor::zeros(&[g.cout]);
    let mut grad_in = want_input_grad.then(|| Tensor::zeros(input.shape()));
    let mut patches = vec![0.0; chunk * plen];
    let mut grad_patches = vec![0.0; chunk * plen];
    let in_item = g.h * g.w * g.cin;
    let out_item = g.out_pixels() * g.cout;
    for s in 0..g.n {
        let image = &input.data()[s * in_item..(s + 1) * in_item];
        let dy = &grad_out.data()[s * out_item..(s + 1) * out_item];
        for row in dy.chunks_exact(g.cout) {
            for (b, d) in grad_b.data_mut().iter_mut().zip(row) {
                *b += d;
            }
        }
        let mut p0 = 0;
        while p0 < g.out_pixels() {
            let p1 = (p0 + chunk).min(g.out_pixels());
            let rows = p1 - p0;
            let dy_chunk = &dy[p0 * g.cout..p1 * g.cout];
            g.im2col(image, p0, p1, &mut patches);
            gemm(plen, rows, g.cout, &patches, true, dy_chunk, false, grad_w.data_mut(), 1.0);
            if let Some(gi) = grad_in.as_mut() {
                gemm(rows, g.cout, plen, dy_chunk, false, weights.data(), true, &mut grad_patches, 0.0);
                g.col2im_add(&grad_patches, p0, p1, &mut gi.data_mut()[s * in_item..(s + 1) * in_item]);
            }
            p0 = p1;
        }
    }
    Ok(ConvGrads {
        input: grad_in,
        weights: grad_w,
        bias: grad_b,
    })
}

/// Max pooling. Returns the pooled tensor and, per output element, the flat
/// input index that supplied the maximum (first one in scan order on ties).
pub fn maxpool2d_forward(input: &Tensor, window: usize, stride: usize) -> Result<(Tensor, Vec<usize>)> {
    let (n, h, w, c) = input.dims4()?;
    if window == 0 || stride == 0 {
        return Err(Error::InvalidArgument("pool window and stride must be positive".into()));
    }
    if window > h || window > w {
        return Err(Error::shape(format!("spatial extent >= {window}"), format!("{h}x{w}")));
    }
    let out_h = (h - window) / stride + 1;
    let out_w = (w - window) / stride + 1;
    let mut out = Tensor::zeros(&[n, out_h, out_w, c]);
    let mut argmax = vec![0usize; out.len()];
    let x = input.data();
    let o = out.data_mut();
    for s in 0..n {
        for oy in 0..out_h {
            for ox in 0..out_w {
                for ch in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for ky in 0..window {
                        for kx in 0..window {
                            let idx = ((s * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
                            if x[idx] > best || (ky == 0 && kx == 0) {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let oi = ((s * out_h + oy) * out_w + ox) * c + ch;
                    o[oi] = best;
                    argmax[oi] = best_idx;
                }
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each upstream gradient to the input position that won its window.
pub fn maxpool2d_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    if argmax.len() != grad_out.len() {
        return Err(Error::shape(format!("{} pooled values", argmax.len()), grad_out.len()));
    }
    let mut grad = Tensor::zeros(input_shape);
    let g = grad.data_mut();
    for (&idx, &d) in argmax.iter().zip(grad_out.data()) {
        g[idx] += d;
    }
    Ok(grad)
}

/// `input [N, D] x weights [D, M] + bias [M]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, d) = input.dims2()?;
    let (wd, m) = weights.dims2()?;
    if wd != d {
        return Err(Error::shape(format!("{wd} input features"), d));
    }
    if bias.len() != m {
        return Err(Error::shape(format!("{m} biases"), bias.len()));
    }
    let mut out = Tensor::zeros(&[n, m]);
    for row in out.data_mut().chunks_exact_mut(m.max(1)) {
        row.copy_from_slice(bias.data());
    }
    gemm(n, d, m, input.data(), false, weights.data(), false, out.data_mut(), 1.0);
    Ok(out)
}

pub struct DenseGrads {
    pub input: Option<Tensor>,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn dense_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor, want_input_grad: bool) -> Result<DenseGrads> {
    let (n, d) = input.dims2()?;
    let (_, m) = weights.dims2()?;
    if grad_out.shape() != [n, m] {
        return Err(Error::shape(format!("[{n}, {m}]"), format!("{:?}", grad_out.shape())));
    }
    let mut grad_w = Tensor::zeros(&[d, m]);
    gemm(d, n, m, input.data(), true, grad_out.data(), false, grad_w.data_mut(), 0.0);
    let mut grad_b = Tensor::zeros(&[m]);
    for row in grad_out.data().chunks_exact(m.max(1)) {
        for (b, g) in grad_b.data_mut().iter_mut().zip(row) {
            *b += g;
        }
    }
    let grad_in = want_input_grad.then(|| {
        let mut gi = Tensor::zeros(&[n, d]);
        gemm(n, m, d, grad_out.data(), false, weights.data(), true, gi.data_mut(), 0.0);
        gi
    });
    Ok(DenseGrads {
        input: grad_in,
        weights: grad_w,
        bias: grad_b,
    })
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(input.shape(), data).expect("same shape")
}

/// Gates the upstream gradient by the sign of the cached forward input.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if input.shape() != grad_out.shape() {
        return Err(Error::shape(format!("{:?}", input.shape()), format!("{:?}", grad_out.shape())));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(input.shape(), data)
}

/// Inverted dropout. In train mode each element is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; the returned mask holds
/// the applied multipliers. Eval mode (or rate 0) is the identity.
pub fn dropout_forward<R: Rng + ?Sized>(input: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> Result<(Tensor, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("dropout rate {rate} not in [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let data = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((Tensor::new(input.shape(), data)?, Some(mask)))
}

pub fn dropout_backward(mask: Option<&[f64]>, grad_out: &Tensor) -> Tensor {
    match mask {
        None => grad_out.clone(),
        Some(mask) => {
            let data = grad_out.data().iter().zip(mask).map(|(g, m)| g * m).collect();
            Tensor::new(grad_out.shape(), data).expect("same shape")
        }
    }
}

/// Row-wise softmax of an N×K tensor, shifted by the row maximum.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let (_, k) = logits.dims2()?;
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(k.max(1)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(out)
}

/// Mean cross-entropy of softmax(logits) against one-hot targets, and its
/// gradient with respect to the logits, `(softmax - target) / N`.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    let (n, k) = logits.dims2()?;
    if targets.shape() != logits.shape() {
        return Err(Error::shape(format!("{:?}", logits.shape()), format!("{:?}", targets.shape())));
    }
    let mut grad = Tensor::zeros(&[n, k]);
    let mut loss = 0.0;
    for i in 0..n {
        let z = logits.item(i);
        let t = targets.item(i);
        let hot = t.iter().filter(|&&v| v == 1.0).count();
        if hot != 1 || t.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(format!("target row {i} is not one-hot")));
        }
        let class = t.iter().position(|&v| v == 1.0).unwrap();
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - z[class];
        let g = &mut grad.data_mut()[i * k..(i + 1) * k];
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = ((z[j] - log_sum).exp() - t[j]) / n as f64;
        }
    }
    Ok((loss / n as f64, grad))
}
