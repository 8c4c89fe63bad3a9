use super::{gemm, Scalar, Tensor, TensorError};

const K: usize = 3;

fn mismatch(msg: String) -> TensorError {
    TensorError::ShapeMismatch(msg)
}

/// Unfolds one HWC image into rows of 3x3xC patches (zero padded), row
/// index y*w + x, column (dy*3 + dx)*c + ci.
fn im2col<T: Scalar>(img: &[T], h: usize, w: usize, c: usize, col: &mut [T]) {
    let row_len = K * K * c;
    for y in 0..h {
        for x in 0..w {
            let row = &mut col[(y * w + x) * row_len..][..row_len];
            for dy in 0..K {
                let sy = y as isize + dy as isize - 1;
                for dx in 0..K {
                    let sx = x as isize + dx as isize - 1;
                    let dst = &mut row[(dy * K + dx) * c..][..c];
                    if sy < 0 || sy >= h as isize || sx < 0 || sx >= w as isize {
                        dst.fill(T::ZERO);
                    } else {
                        let src = (sy as usize * w + sx as usize) * c;
                        dst.copy_from_slice(&img[src..src + c]);
                    }
                }
            }
        }
    }
}

/// Scatter-adds patch gradients back onto an HWC image gradient.
fn col2im<T: Scalar>(col: &[T], h: usize, w: usize, c: usize, img: &mut [T]) {
    let row_len = K * K * c;
    for y in 0..h {
        for x in 0..w {
            let row = &col[(y * w + x) * row_len..][..row_len];
            for dy in 0..K {
                let sy = y as isize + dy as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for dx in 0..K {
                    let sx = x as isize + dx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let dst = (sy as usize * w + sx as usize) * c;
                    for (d, &g) in img[dst..dst + c].iter_mut().zip(&row[(dy * K + dx) * c..][..c]) {
                        *d += g;
                    }
                }
            }
        }
    }
}

fn conv_dims<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
) -> Result<(usize, usize, usize, usize, usize), TensorError> {
    input.expect_rank(4, "conv input")?;
    kernels.expect_rank(4, "conv kernels")?;
    let &[n, h, w, c] = input.shape() else { unreachable!() };
    let &[kh, kw, kc, f] = kernels.shape() else { unreachable!() };
    if kh != K || kw != K || kc != c {
        return Err(mismatch(format!(
            "kernels {:?} do not fit input {:?} (need [3,3,{c},F])",
            kernels.shape(),
            input.shape()
        )));
    }
    Ok((n, h, w, c, f))
}

/// 3x3, stride 1, zero "same" padding convolution.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, TensorError> {
    let (n, h, w, c, f) = conv_dims(input, kernels)?;
    if bias.shape() != [f] {
        return Err(mismatch(format!("bias {:?} for {f} filters", bias.shape())));
    }
    let hw = h * w;
    let mut out = vec![T::ZERO; n * hw * f];
    let mut col = vec![T::ZERO; hw * K * K * c];
    for s in 0..n {
        im2col(&input.data()[s * hw * c..][..hw * c], h, w, c, &mut col);
        let dst = &mut out[s * hw * f..][..hw * f];
        for row in dst.chunks_exact_mut(f) {
            row.copy_from_slice(bias.data());
        }
        gemm(false, false, hw, K * K * c, f, &col, kernels.data(), T::ONE, dst);
    }
    Tensor::new(vec![n, h, w, f], out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T: Scalar> {
    /// Absent when the caller did not ask for it (first layer).
    pub input: Option<Tensor<T>>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
    need_input_grad: bool,
) -> Result<ConvGrads<T>, TensorError> {
    let (n, h, w, c, f) = conv_dims(input, kernels)?;
    if grad_out.shape() != [n, h, w, f] {
        return Err(mismatch(format!(
            "upstream gradient {:?}, expected {:?}",
            grad_out.shape(),
            [n, h, w, f]
        )));
    }
    let hw = h * w;
    let patch = K * K * c;
    let mut gk = vec![T::ZERO; patch * f];
    let mut gb = vec![T::ZERO; f];
    let mut gi = if need_input_grad { vec![T::ZERO; n * hw * c] } else { Vec::new() };
    let mut col = vec![T::ZERO; hw * patch];
    let mut gcol = if need_input_grad { vec![T::ZERO; hw * patch] } else { Vec::new() };
    for s in 0..n {
        let go = &grad_out.data()[s * hw * f..][..hw * f];
        im2col(&input.data()[s * hw * c..][..hw * c], h, w, c, &mut col);
        gemm(true, false, patch, hw, f, &col, go, T::ONE, &mut gk);
        for row in go.chunks_exact(f) {
            for (b, &g) in gb.iter_mut().zip(row) {
                *b += g;
            }
        }
        if need_input_grad {
            gemm(false, true, hw, f, patch, go, kernels.data(), T::ZERO, &mut gcol);
            col2im(&gcol, h, w, c, &mut gi[s * hw * c..][..hw * c]);
        }
    }
    Ok(ConvGrads {
        input: if need_input_grad {
            Some(Tensor::new(input.shape().to_vec(), gi)?)
        } else {
            None
        },
        kernels: Tensor::new(kernels.shape().to_vec(), gk)?,
        bias: Tensor::new(vec![f], gb)?,
    })
}

/// 2x2 max pooling, stride 2. Returns the pooled tensor and, per output
/// element, the flat input index of the chosen maximum (first in row-major
/// window order on ties).
pub fn maxpool2_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>), TensorError> {
    input.expect_rank(4, "pool input")?;
    let &[n, h, w, c] = input.shape() else { unreachable!() };
    if h % 2 != 0 || w % 2 != 0 {
        return Err(TensorError::OddSpatialDim { height: h, width: w });
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut arg = Vec::with_capacity(n * oh * ow * c);
    for s in 0..n {
        for y in 0..oh {
            for xo in 0..ow {
                for ch in 0..c {
                    let idx = |dy: usize, dx: usize| ((s * h + 2 * y + dy) * w + 2 * xo + dx) * c + ch;
                    let mut best = idx(0, 0);
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let i = idx(dy, dx);
                        if x[i] > x[best] {
                            best = i;
                        }
                    }
                    out.push(x[best]);
                    arg.push(best);
                }
            }
        }
    }
    Ok((Tensor::new(vec![n, oh, ow, c], out)?, arg))
}

pub fn maxpool2_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>, TensorError> {
    let in_len: usize = input_shape.iter().product();
    let expected = if let &[n, h, w, c] = input_shape { [n, h / 2, w / 2, c] } else { [0; 4] };
    if input_shape.len() != 4 || grad_out.shape() != expected || argmax.len() != grad_out.len() {
        return Err(mismatch(format!(
            "pool gradient {:?} / {} indices do not match input {input_shape:?}",
            grad_out.shape(),
            argmax.len()
        )));
    }
    let mut g = vec![T::ZERO; in_len];
    for (&i, &v) in argmax.iter().zip(grad_out.data()) {
        if i >= in_len {
            return Err(mismatch(format!("argmax index {i} outside input of {in_len}")));
        }
        g[i] += v;
    }
    Tensor::new(input_shape.to_vec(), g)
}

fn dense_dims<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>) -> Result<(usize, usize, usize), TensorError> {
    input.expect_rank(2, "dense input")?;
    weights.expect_rank(2, "dense weights")?;
    let (n, d) = (input.shape()[0], input.shape()[1]);
    let (wd, u) = (weights.shape()[0], weights.shape()[1]);
    if wd != d {
        return Err(mismatch(format!(
            "input {:?} does not fit weights {:?}",
            input.shape(),
            weights.shape()
        )));
    }
    Ok((n, d, u))
}

/// `input (N x D) * weights (D x U) + bias`.
pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, TensorError> {
    let (n, d, u) = dense_dims(input, weights)?;
    if bias.shape() != [u] {
        return Err(mismatch(format!("bias {:?} for {u} units", bias.shape())));
    }
    let mut out = Vec::with_capacity(n * u);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    gemm(false, false, n, d, u, input.data(), weights.data(), T::ONE, &mut out);
    Tensor::new(vec![n, u], out)
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>, TensorError> {
    let (n, d, u) = dense_dims(input, weights)?;
    if grad_out.shape() != [n, u] {
        return Err(mismatch(format!(
            "upstream gradient {:?}, expected [{n}, {u}]",
            grad_out.shape()
        )));
    }
    let mut gi = vec![T::ZERO; n * d];
    gemm(false, true, n, u, d, grad_out.data(), weights.data(), T::ZERO, &mut gi);
    let mut gw = vec![T::ZERO; d * u];
    gemm(true, false, d, n, u, input.data(), grad_out.data(), T::ZERO, &mut gw);
    let mut gb = vec![T::ZERO; u];
    for row in grad_out.data().chunks_exact(u) {
        for (b, &g) in gb.iter_mut().zip(row) {
            *b += g;
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(vec![n, d], gi)?,
        weights: Tensor::new(vec![d, u], gw)?,
        bias: Tensor::new(vec![u], gb)?,
    })
}

pub fn relu_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    Tensor {
        shape: x.shape().to_vec(),
        data: x.data().iter().map(|&v| if v > T::ZERO { v } else { T::ZERO }).collect(),
    }
}

/// Passes the upstream gradient where `x > 0`; the gradient at 0 is 0.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    if x.shape() != grad_out.shape() {
        return Err(mismatch(format!("relu {:?} vs gradient {:?}", x.shape(), grad_out.shape())));
    }
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > T::ZERO { g } else { T::ZERO })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Row-wise softmax of an `N x K` tensor (max-shifted).
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    logits.expect_rank(2, "logits")?;
    let k = logits.shape()[1];
    let mut out = logits.data().to_vec();
    if k == 0 {
        return Err(mismatch("softmax over zero classes".into()));
    }
    for row in out.chunks_exact_mut(k) {
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = T::ZERO;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    Tensor::new(logits.shape().to_vec(), out)
}

/// Mean sparse categorical cross-entropy. Returns the loss, the
/// probabilities and the gradient with respect to the logits.
pub fn softmax_xent<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(f64, Tensor<T>, Tensor<T>), TensorError> {
    let probs = softmax(logits)?;
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(mismatch(format!("{} labels for {n} rows", labels.len())));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(TensorError::LabelOutOfRange { label, classes: k });
    }
    let mut loss = 0.0f64;
    let mut grad = probs.data().to_vec();
    let scale = T::from_f64(1.0 / n as f64);
    for (i, &label) in labels.iter().enumerate() {
        let p = probs.data()[i * k + label].to_f64().max(f64::MIN_POSITIVE);
        loss -= p.ln();
        grad[i * k + label] -= T::ONE;
    }
    for g in grad.iter_mut() {
        *g *= scale;
    }
    let loss = loss / n as f64;
    if !loss.is_finite() {
        return Err(TensorError::NonFinite("cross-entropy loss".into()));
    }
    Ok((loss, probs, Tensor::new(vec![n, k], grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn rand_tensor(rng: &mut SplitMix64, shape: &[usize]) -> Tensor<f64> {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).unwrap()
    }

    fn naive_conv(x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
        let &[n, h, w, c] = x.shape() else { panic!() };
        let f = k.shape()[3];
        let mut out = vec![0.0; n * h * w * f];
        for s in 0..n {
            for y in 0..h {
                for xx in 0..w {
                    for fi in 0..f {
                        let mut acc = b.data()[fi];
                        for dy in 0..3 {
                            for dx in 0..3 {
                                for ci in 0..c {
                                    let (sy, sx) = (y as isize + dy as isize - 1, xx as isize + dx as isize - 1);
                                    if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                        continue;
                                    }
                                    let iv = x.data()[((s * h + sy as usize) * w + sx as usize) * c + ci];
                                    acc += iv * k.data()[((dy * 3 + dx) * c + ci) * f + fi];
                                }
                            }
                        }
                        out[((s * h + y) * w + xx) * f + fi] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_naive_loops() {
        let mut rng = SplitMix64::new(1);
        for shape in [[1, 4, 4, 1, 1], [2, 5, 3, 2, 3], [1, 1, 1, 3, 2]] {
            let [n, h, w, c, f] = shape;
            let x = rand_tensor(&mut rng, &[n, h, w, c]);
            let k = rand_tensor(&mut rng, &[3, 3, c, f]);
            let b = rand_tensor(&mut rng, &[f]);
            let got = conv2d_forward(&x, &k, &b).unwrap();
            for (g, want) in got.data().iter().zip(naive_conv(&x, &k, &b)) {
                assert!((g - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_kernel_and_zero_input() {
        let mut rng = SplitMix64::new(2);
        let x = rand_tensor(&mut rng, &[1, 4, 5, 2]);
        let mut k = Tensor::<f64>::zeros(&[3, 3, 2, 2]);
        for c in 0..2 {
            k.data_mut()[((3 + 1) * 2 + c) * 2 + c] = 1.0;
        }
        let out = conv2d_forward(&x, &k, &Tensor::zeros(&[2])).unwrap();
        assert_eq!(out.data(), x.data());
        let b = Tensor::new(vec![2], vec![0.5, -1.0]).unwrap();
        let out = conv2d_forward(&Tensor::zeros(&[1, 2, 2, 2]), &k, &b).unwrap();
        assert_eq!(out.data(), &[0.5, -1.0, 0.5, -1.0, 0.5, -1.0, 0.5, -1.0]);
    }

    #[test]
    fn conv_shape_errors() {
        let x = Tensor::<f64>::zeros(&[1, 4, 4, 2]);
        assert!(conv2d_forward(&x, &Tensor::zeros(&[3, 3, 1, 4]), &Tensor::zeros(&[4])).is_err());
        assert!(conv2d_forward(&x, &Tensor::zeros(&[5, 5, 2, 4]), &Tensor::zeros(&[4])).is_err());
        assert!(conv2d_forward(&x, &Tensor::zeros(&[3, 3, 2, 4]), &Tensor::zeros(&[3])).is_err());
        let k = Tensor::zeros(&[3, 3, 2, 4]);
        assert!(conv2d_backward(&x, &k, &Tensor::zeros(&[1, 4, 4, 3]), true).is_err());
    }

    #[test]
    fn conv_backward_zero_upstream_and_single_pixel() {
        let mut rng = SplitMix64::new(3);
        let x = rand_tensor(&mut rng, &[1, 4, 4, 1]);
        let k = rand_tensor(&mut rng, &[3, 3, 1, 1]);
        let g = conv2d_backward(&x, &k, &Tensor::zeros(&[1, 4, 4, 1]), true).unwrap();
        assert!(g.kernels.data().iter().chain(g.bias.data()).all(|&v| v == 0.0));
        assert!(g.input.unwrap().data().iter().all(|&v| v == 0.0));

        let mut up = Tensor::zeros(&[1, 4, 4, 1]);
        up.data_mut()[4 + 1] = 1.0; // pixel (1,1)
        let g = conv2d_backward(&x, &k, &up, false).unwrap();
        assert!(g.input.is_none());
        for dy in 0..3 {
            for dx in 0..3 {
                assert_eq!(g.kernels.data()[dy * 3 + dx], x.data()[dy * 4 + dx]);
            }
        }
        assert_eq!(g.bias.data(), &[1.0]);
    }

    #[test]
    fn pool_basics() {
        let x = Tensor::<f64>::new(vec![1, 2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, arg) = maxpool2_forward(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(arg, vec![3]);

        let c = Tensor::<f64>::filled(&[1, 4, 4, 1], 7.0);
        let (y, arg) = maxpool2_forward(&c).unwrap();
        assert!(y.data().iter().all(|&v| v == 7.0));
        assert_eq!(arg, vec![0, 2, 8, 10]);

        assert!(matches!(
            maxpool2_forward(&Tensor::<f64>::zeros(&[1, 3, 4, 1])),
            Err(TensorError::OddSpatialDim { .. })
        ));
    }

    #[test]
    fn pool_backward_routes_to_argmax() {
        let mut rng = SplitMix64::new(5);
        let x = rand_tensor(&mut rng, &[2, 4, 6, 3]);
        let (y, arg) = maxpool2_forward(&x).unwrap();
        let ones = Tensor::filled(y.shape(), 1.0);
        let g = maxpool2_backward(&ones, &arg, x.shape()).unwrap();
        assert_eq!(g.data().iter().sum::<f64>(), y.len() as f64);
        assert!(g.data().iter().all(|&v| v == 0.0 || v == 1.0));
        let zero = maxpool2_backward(&Tensor::<f64>::zeros(y.shape()), &arg, x.shape()).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
        // Every output dominates its window.
        let &[n, h, w, c] = x.shape() else { panic!() };
        for s in 0..n {
            for oy in 0..h / 2 {
                for ox in 0..w / 2 {
                    for ch in 0..c {
                        let out = y.data()[((s * h / 2 + oy) * w / 2 + ox) * c + ch];
                        for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                            let v = x.data()[((s * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch];
                            assert!(out >= v);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dense_matches_naive_and_identities() {
        let mut rng = SplitMix64::new(6);
        let x = rand_tensor(&mut rng, &[2, 3]);
        let w = rand_tensor(&mut rng, &[3, 4]);
        let b = rand_tensor(&mut rng, &[4]);
        let y = dense_forward(&x, &w, &b).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                let mut acc = b.data()[j];
                for p in 0..3 {
                    acc += x.data()[i * 3 + p] * w.data()[p * 4 + j];
                }
                assert!((y.data()[i * 4 + j] - acc).abs() < 1e-12);
            }
        }
        let mut eye = Tensor::<f64>::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 4] = 1.0;
        }
        assert_eq!(dense_forward(&x, &eye, &Tensor::zeros(&[3])).unwrap().data(), x.data());
        let z = dense_forward(&Tensor::zeros(&[2, 3]), &w, &b).unwrap();
        assert_eq!(&z.data()[..4], b.data());
        assert_eq!(&z.data()[4..], b.data());
        assert!(dense_forward(&x, &Tensor::zeros(&[4, 4]), &b).is_err());
    }

    #[test]
    fn relu_cases() {
        let x = Tensor::<f64>::new(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&x, &Tensor::filled(&[3], 1.0)).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
        let neg = Tensor::<f64>::filled(&[4], -3.0);
        assert!(relu_forward(&neg).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_uniform_and_saturated() {
        let logits = Tensor::<f64>::zeros(&[3, 8]);
        let (loss, probs, _) = softmax_xent(&logits, &[0, 3, 7]).unwrap();
        assert!(probs.data().iter().all(|&p| (p - 0.125).abs() < 1e-15));
        assert!((loss - 8f64.ln()).abs() < 1e-12);
        assert!((loss - 2.0794).abs() < 1e-4);

        let mut l = Tensor::<f64>::zeros(&[1, 4]);
        l.data_mut()[2] = 50.0;
        let (loss, _, _) = softmax_xent(&l, &[2]).unwrap();
        assert!(loss < 1e-20);
        assert!(matches!(
            softmax_xent(&l, &[4]),
            Err(TensorError::LabelOutOfRange { label: 4, classes: 4 })
        ));
    }

    #[test]
    fn softmax_rows_sum_to_one_for_extreme_logits() {
        let data = vec![1000.0f32, -1000.0, 0.0, 3.0, 88.0, 89.0, -50.0, 0.5];
        let p = softmax(&Tensor::new(vec![2, 4], data).unwrap()).unwrap();
        for row in p.data().chunks(4) {
            assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|v| v.is_finite()));
        }
    }
}
