//! Central finite-difference checks for every layer, in f64.
//!
//! Each layer output is reduced to the scalar `L = sum(out * r)` for a fixed
//! random `r`, so the analytic gradient is the backward pass applied to `r`.

use fragsleuth::rng::SplitMix64;
use fragsleuth::tensor::*;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const FLOOR: f64 = 1e-6;
const TRIALS: u64 = 20;

fn rand_t(rng: &mut SplitMix64, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).unwrap()
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FLOOR)
}

/// Max relative error between `analytic` and central differences of `f`
/// with respect to `x`, skipping indices where `skip` says the function is
/// not differentiable.
fn check(
    x: &Tensor<f64>,
    analytic: &Tensor<f64>,
    f: impl Fn(&Tensor<f64>) -> f64,
    skip: impl Fn(usize) -> bool,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        if skip(i) {
            continue;
        }
        let mut plus = x.clone();
        plus.data_mut()[i] += H;
        let mut minus = x.clone();
        minus.data_mut()[i] -= H;
        let numeric = (f(&plus) - f(&minus)) / (2.0 * H);
        worst = worst.max(rel_err(analytic.data()[i], numeric));
    }
    worst
}

#[test]
fn conv2d_gradients_match_finite_differences() {
    for trial in 0..TRIALS {
        let mut rng = SplitMix64::new(100 + trial);
        let n = 1 + rng.below(2) as usize;
        let h = 2 + rng.below(4) as usize;
        let w = 2 + rng.below(4) as usize;
        let c = 1 + rng.below(3) as usize;
        let f = 1 + rng.below(3) as usize;
        let x = rand_t(&mut rng, &[n, h, w, c]);
        let k = rand_t(&mut rng, &[3, 3, c, f]);
        let b = rand_t(&mut rng, &[f]);
        let r = rand_t(&mut rng, &[n, h, w, f]);
        let g = conv2d_backward(&x, &k, &r, true).unwrap();
        let e_in = check(&x, g.input.as_ref().unwrap(), |x| dot(&conv2d_forward(x, &k, &b).unwrap(), &r), |_| false);
        let e_k = check(&k, &g.kernels, |k| dot(&conv2d_forward(&x, k, &b).unwrap(), &r), |_| false);
        let e_b = check(&b, &g.bias, |b| dot(&conv2d_forward(&x, &k, b).unwrap(), &r), |_| false);
        assert!(e_in.max(e_k).max(e_b) < TOL, "trial {trial}: {e_in} {e_k} {e_b}");
    }
}

#[test]
fn dense_gradients_match_finite_differences() {
    for trial in 0..TRIALS {
        let mut rng = SplitMix64::new(200 + trial);
        let n = 1 + rng.below(4) as usize;
        let d = 1 + rng.below(6) as usize;
        let u = 1 + rng.below(6) as usize;
        let x = rand_t(&mut rng, &[n, d]);
        let w = rand_t(&mut rng, &[d, u]);
        let b = rand_t(&mut rng, &[u]);
        let r = rand_t(&mut rng, &[n, u]);
        let g = dense_backward(&x, &w, &r).unwrap();
        let e_in = check(&x, &g.input, |x| dot(&dense_forward(x, &w, &b).unwrap(), &r), |_| false);
        let e_w = check(&w, &g.weights, |w| dot(&dense_forward(&x, w, &b).unwrap(), &r), |_| false);
        let e_b = check(&b, &g.bias, |b| dot(&dense_forward(&x, &w, b).unwrap(), &r), |_| false);
        assert!(e_in.max(e_w).max(e_b) < TOL, "trial {trial}: {e_in} {e_w} {e_b}");
    }
}

#[test]
fn maxpool_gradients_match_finite_differences_away_from_ties() {
    for trial in 0..TRIALS {
        let mut rng = SplitMix64::new(300 + trial);
        let n = 1 + rng.below(2) as usize;
        let h = 2 * (1 + rng.below(3) as usize);
        let w = 2 * (1 + rng.below(3) as usize);
        let c = 1 + rng.below(3) as usize;
        let x = rand_t(&mut rng, &[n, h, w, c]);
        let (y, arg) = maxpool2_forward(&x).unwrap();
        let r = rand_t(&mut rng, y.shape());
        let g = maxpool2_backward(&r, &arg, x.shape()).unwrap();
        // A window is safe when its top two values differ by more than 2h.
        let near_tie = |i: usize| {
            let ch = i % c;
            let px = (i / c) % w;
            let py = (i / (c * w)) % h;
            let s = i / (c * w * h);
            let (wy, wx) = (py / 2 * 2, px / 2 * 2);
            let mut vals: Vec<f64> = [(0, 0), (0, 1), (1, 0), (1, 1)]
                .iter()
                .map(|&(dy, dx)| x.data()[((s * h + wy + dy) * w + wx + dx) * c + ch])
                .collect();
            vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            vals[0] - vals[1] < 4.0 * H
        };
        let e = check(&x, &g, |x| dot(&maxpool2_forward(x).unwrap().0, &r), near_tie);
        assert!(e < TOL, "trial {trial}: {e}");
    }
}

#[test]
fn relu_gradients_match_finite_differences_away_from_zero() {
    for trial in 0..TRIALS {
        let mut rng = SplitMix64::new(400 + trial);
        let len = 1 + rng.below(30) as usize;
        let x = rand_t(&mut rng, &[len]);
        let r = rand_t(&mut rng, &[len]);
        let g = relu_backward(&x, &r).unwrap();
        let e = check(&x, &g, |x| dot(&relu_forward(x), &r), |i| x.data()[i].abs() < 4.0 * H);
        assert!(e < TOL, "trial {trial}: {e}");
    }
}

#[test]
fn softmax_xent_gradient_matches_finite_differences() {
    for trial in 0..TRIALS {
        let mut rng = SplitMix64::new(500 + trial);
        let n = 1 + rng.below(5) as usize;
        let k = 2 + rng.below(7) as usize;
        let logits = rand_t(&mut rng, &[n, k]);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(k as u64) as usize).collect();
        let (_, probs, grad) = softmax_xent(&logits, &labels).unwrap();
        for row in probs.data().chunks(k) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&p| p > 0.0 && p < 1.0));
        }
        let e = check(&logits, &grad, |l| softmax_xent(l, &labels).unwrap().0, |_| false);
        assert!(e < TOL, "trial {trial}: {e}");
    }
}

#[test]
fn stacked_layers_chain_correctly() {
    // conv -> relu -> pool -> dense -> xent, gradient w.r.t. the conv kernel.
    for trial in 0..TRIALS {
        let mut rng = SplitMix64::new(600 + trial);
        let x = rand_t(&mut rng, &[2, 4, 4, 2]);
        let k = rand_t(&mut rng, &[3, 3, 2, 3]);
        let kb = rand_t(&mut rng, &[3]);
        let w = rand_t(&mut rng, &[12, 4]);
        let wb = rand_t(&mut rng, &[4]);
        let labels = [1usize, 3];
        let loss = |k: &Tensor<f64>| {
            let a = relu_forward(&conv2d_forward(&x, k, &kb).unwrap());
            let (p, _) = maxpool2_forward(&a).unwrap();
            let flat = p.reshape(vec![2, 12]).unwrap();
            softmax_xent(&dense_forward(&flat, &w, &wb).unwrap(), &labels).unwrap().0
        };
        let z = conv2d_forward(&x, &k, &kb).unwrap();
        let a = relu_forward(&z);
        let (p, arg) = maxpool2_forward(&a).unwrap();
        let flat = p.reshape(vec![2, 12]).unwrap();
        let (_, _, gl) = softmax_xent(&dense_forward(&flat, &w, &wb).unwrap(), &labels).unwrap();
        let gd = dense_backward(&flat, &w, &gl).unwrap();
        let gp = gd.input.reshape(vec![2, 2, 2, 3]).unwrap();
        let ga = maxpool2_backward(&gp, &arg, a.shape()).unwrap();
        let gz = relu_backward(&z, &ga).unwrap();
        let gk = conv2d_backward(&x, &k, &gz, false).unwrap().kernels;
        // Kinks sit at z = 0 and at pool ties; random draws keep clear of both
        // with overwhelming probability, and a kink would show up as a large error.
        let e = check(&k, &gk, loss, |_| false);
        assert!(e < TOL, "trial {trial}: {e}");
    }
}
