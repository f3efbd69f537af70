use oclbcp::nn::gradcheck::{check_input, check_params};
use oclbcp::nn::{softmax_rows, Graph, ParamStore, Tensor};
use oclbcp::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Direct loop convolution: stride 1, zero padding on the right/bottom.
fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
    let [n, ci, h, wd] = x.shape().try_into().unwrap();
    let [co, _, k, _] = w.shape().try_into().unwrap();
    let xv = |i: usize, c: usize, y: usize, xx: usize| {
        if y < h && xx < wd {
            x.data()[((i * ci + c) * h + y) * wd + xx]
        } else {
            0.0
        }
    };
    let mut out = Vec::new();
    for i in 0..n {
        for o in 0..co {
            for y in 0..h {
                for xx in 0..wd {
                    let mut s = b.data()[o];
                    for c in 0..ci {
                        for dy in 0..k {
                            for dx in 0..k {
                                s += w.data()[((o * ci + c) * k + dy) * k + dx] * xv(i, c, y + dy, xx + dx);
                            }
                        }
                    }
                    out.push(s);
                }
            }
        }
    }
    out
}

#[test]
fn conv_identity_tap_and_bias() {
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    let x = g.input(Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
    let w = g.input(Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
    let b = g.input(Tensor::from_vec(&[1], vec![0.0]).unwrap()).unwrap();
    let y = g.conv2d(x, w, b).unwrap();
    assert_eq!(g.value(y).data(), &[1.0, 2.0, 3.0, 4.0]);

    let z = g.input(Tensor::zeros(&[1, 2, 3, 3])).unwrap();
    let w2 = g.input(Tensor::from_vec(&[3, 2, 2, 2], vec![0.7; 24]).unwrap()).unwrap();
    let b2 = g.input(Tensor::from_vec(&[3], vec![0.5, -1.0, 2.0]).unwrap()).unwrap();
    let y2 = g.conv2d(z, w2, b2).unwrap();
    let d = g.value(y2).data();
    assert!(d[..9].iter().all(|&v| v == 0.5));
    assert!(d[9..18].iter().all(|&v| v == -1.0));
    assert!(d[18..].iter().all(|&v| v == 2.0));
}

#[test]
fn conv_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (n, ci, co, h, w) in [(1, 1, 1, 4, 4), (2, 3, 4, 5, 6), (1, 2, 3, 1, 1)] {
        let x = rand_tensor(&mut rng, &[n, ci, h, w]);
        let wt = rand_tensor(&mut rng, &[co, ci, 2, 2]);
        let b = rand_tensor(&mut rng, &[co]);
        let expected = naive_conv(&x, &wt, &b);
        let store = ParamStore::<f64>::new();
        let mut g = Graph::new(&store);
        let (xv, wv, bv) = (g.input(x).unwrap(), g.input(wt).unwrap(), g.input(b).unwrap());
        let y = g.conv2d(xv, wv, bv).unwrap();
        for (a, e) in g.value(y).data().iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}

#[test]
fn conv_shape_errors() {
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    let x = g.input(Tensor::zeros(&[1, 2, 4, 4])).unwrap();
    let w = g.input(Tensor::zeros(&[1, 3, 2, 2])).unwrap();
    let b = g.input(Tensor::zeros(&[1])).unwrap();
    assert!(g.conv2d(x, w, b).is_err());
}

#[test]
fn linear_examples_and_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    let x = rand_tensor(&mut rng, &[3, 4]);
    let mut eye = Tensor::zeros(&[4, 4]);
    for i in 0..4 {
        eye.data_mut()[i * 4 + i] = 1.0;
    }
    let xv = g.input(x.clone()).unwrap();
    let iv = g.input(eye).unwrap();
    let zb = g.input(Tensor::zeros(&[4])).unwrap();
    let y = g.linear(xv, iv, zb).unwrap();
    assert_eq!(g.value(y).data(), x.data());

    let zw = g.input(Tensor::zeros(&[4, 2])).unwrap();
    let b = g.input(Tensor::from_vec(&[2], vec![1.5, -2.0]).unwrap()).unwrap();
    let y = g.linear(xv, zw, b).unwrap();
    assert_eq!(g.value(y).data(), &[1.5, -2.0, 1.5, -2.0, 1.5, -2.0]);

    let w = rand_tensor(&mut rng, &[4, 5]);
    let bb = rand_tensor(&mut rng, &[5]);
    let (wv, bv) = (g.input(w.clone()).unwrap(), g.input(bb.clone()).unwrap());
    let y = g.linear(xv, wv, bv).unwrap();
    for r in 0..3 {
        for k in 0..5 {
            let mut s = bb.data()[k];
            for d in 0..4 {
                s += x.data()[r * 4 + d] * w.data()[d * 5 + k];
            }
            assert!((g.value(y).data()[r * 5 + k] - s).abs() < 1e-12);
        }
    }
    let bad = g.input(Tensor::zeros(&[3, 5])).unwrap();
    assert!(g.linear(xv, bad, bv).is_err());
}

#[test]
fn maxpool_examples() {
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    let x = g.input(Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
    let y = g.maxpool2(x).unwrap();
    assert_eq!(g.value(y).data(), &[4.0]);
    let c = g.input(Tensor::from_vec(&[2, 3, 4, 6], vec![0.25; 144]).unwrap()).unwrap();
    let y = g.maxpool2(c).unwrap();
    assert_eq!(g.value(y).shape(), &[2, 3, 2, 3]);
    assert!(g.value(y).data().iter().all(|&v| v == 0.25));
    let odd = g.input(Tensor::zeros(&[1, 1, 3, 4])).unwrap();
    assert!(g.maxpool2(odd).is_err());
}

#[test]
fn maxpool_gradient_routes_to_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x0 = rand_tensor(&mut rng, &[1, 2, 4, 4]);
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    let x = g.input(x0.clone()).unwrap();
    let y = g.maxpool2(x).unwrap();
    let s = g.sum_all(y).unwrap();
    let grads = g.backward(s).unwrap();
    let gx = grads.input(x).unwrap();
    // Every window has exactly one 1.
    assert_eq!(gx.data().iter().filter(|&&v| v == 1.0).count(), 8);
    assert_eq!(gx.data().iter().filter(|&&v| v == 0.0).count(), 24);

    let err = check_input(&x0, gx, 1e-5, |t| {
        let mut g = Graph::new(&store);
        let x = g.input(t.clone())?;
        let y = g.maxpool2(x)?;
        let s = g.sum_all(y)?;
        Ok(g.value(s).item())
    })
    .unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn maxpool_ties_go_to_first_element() {
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    let x = g.input(Tensor::from_vec(&[1, 1, 2, 2], vec![0.0, 5.0, 5.0, 5.0]).unwrap()).unwrap();
    let y = g.maxpool2(x).unwrap();
    let s = g.sum_all(y).unwrap();
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.input(x).unwrap().data(), &[0.0, 1.0, 0.0, 0.0]);
}

fn one_hot(n: usize, c: usize, labels: &[usize]) -> Tensor<f64> {
    let mut t = Tensor::zeros(&[n, c]);
    for (i, &l) in labels.iter().enumerate() {
        t.data_mut()[i * c + l] = 1.0;
    }
    t
}

#[test]
fn cross_entropy_examples() {
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    let z = g.input(Tensor::zeros(&[1, 2])).unwrap();
    for class in 0..2 {
        let l = g.softmax_cross_entropy(z, &one_hot(1, 2, &[class])).unwrap();
        assert!((g.value(l).item() - std::f64::consts::LN_2).abs() < 1e-12);
    }
    let sat = g.input(Tensor::from_vec(&[1, 2], vec![30.0, -30.0]).unwrap()).unwrap();
    let l = g.softmax_cross_entropy(sat, &one_hot(1, 2, &[0])).unwrap();
    assert!(g.value(l).item().abs() < 1e-9);

    let not_hot = Tensor::from_vec(&[1, 2], vec![0.5, 0.5]).unwrap();
    assert!(g.softmax_cross_entropy(z, &not_hot).is_err());
    let two_hot = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap();
    assert!(g.softmax_cross_entropy(z, &two_hot).is_err());
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let logits = rand_tensor(&mut rng, &[4, 5]).into_data();
    let logits = Tensor::from_vec(&[4, 5], logits.iter().map(|v| v * 3.0).collect()).unwrap();
    let labels = one_hot(4, 5, &[0, 3, 3, 1]);
    let store = ParamStore::<f64>::new();
    let loss = |t: &Tensor<f64>| -> Result<f64> {
        let mut g = Graph::new(&store);
        let x = g.input(t.clone())?;
        let l = g.softmax_cross_entropy(x, &labels)?;
        Ok(g.value(l).item())
    };
    let mut g = Graph::new(&store);
    let x = g.input(logits.clone()).unwrap();
    let l = g.softmax_cross_entropy(x, &labels).unwrap();
    let grads = g.backward(l).unwrap();
    let err = check_input(&logits, grads.input(x).unwrap(), 1e-5, loss).unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn softmax_rows_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let t = rand_tensor(&mut rng, &[3, 7]);
        let t = Tensor::from_vec(&[3, 7], t.data().iter().map(|v| v * 20.0).collect()).unwrap();
        let s = softmax_rows(&t);
        for row in s.data().chunks(7) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }
}

/// Every differentiable op, composed, against central differences on the
/// parameters and the input.
#[test]
fn composed_ops_pass_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut store = ParamStore::<f64>::new();
    let w1 = store.register("c1.w", rand_tensor(&mut rng, &[3, 2, 2, 2])).unwrap();
    let b1 = store.register("c1.b", rand_tensor(&mut rng, &[3])).unwrap();
    let fw = store.register("fc.w", rand_tensor(&mut rng, &[12, 4])).unwrap();
    let fb = store.register("fc.b", rand_tensor(&mut rng, &[4])).unwrap();
    let input_a = rand_tensor(&mut rng, &[2, 2, 4, 4]);
    let input_b = rand_tensor(&mut rng, &[2, 2, 4, 4]);
    let labels = one_hot(2, 4, &[1, 2]);

    let forward = |store: &ParamStore<f64>, a: &Tensor<f64>| -> Result<(f64, Option<_>)> {
        let mut g = Graph::new(store);
        let xa = g.input(a.clone())?;
        let xb = g.input(input_b.clone())?;
        let branch = |g: &mut Graph<f64>, x| -> Result<_> {
            let (w, b) = (g.param(w1), g.param(b1));
            let c = g.conv2d(x, w, b)?;
            let r = g.relu(c);
            let p = g.maxpool2(r)?;
            g.flatten(p)
        };
        let fa = branch(&mut g, xa)?;
        let fbv = branch(&mut g, xb)?;
        let m = g.maximum(fa, fbv)?;
        let s = g.add(fa, fbv)?;
        let z = g.add(m, s)?;
        let (w, b) = (g.param(fw), g.param(fb));
        let y = g.linear(z, w, b)?;
        let l = g.softmax_cross_entropy(y, &labels)?;
        let loss = g.value(l).item();
        let grads = g.backward(l)?;
        Ok((loss, Some((grads.params().to_vec(), grads.input(xa).cloned()))))
    };

    let (_, grads) = forward(&store, &input_a).unwrap();
    let (pgrads, xgrad) = grads.unwrap();
    assert_eq!(pgrads.len(), 4);
    let err = check_params(&mut store, &pgrads, 1e-5, |s| Ok(forward(s, &input_a)?.0)).unwrap();
    assert!(err < 1e-4, "param rel err {err}");
    let err = check_input(&input_a, &xgrad.unwrap(), 1e-5, |t| Ok(forward(&store, t)?.0)).unwrap();
    assert!(err < 1e-4, "input rel err {err}");
}

#[test]
fn shared_param_reads_are_one_node() {
    let mut store = ParamStore::<f64>::new();
    let w = store.register("w", Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
    let b = store.register("b", Tensor::zeros(&[2])).unwrap();
    let mut g = Graph::new(&store);
    let a = g.param(w);
    let a2 = g.param(w);
    assert_eq!(a, a2);
    let x1 = g.input(Tensor::from_vec(&[1, 2], vec![1.0, 0.0]).unwrap()).unwrap();
    let x2 = g.input(Tensor::from_vec(&[1, 2], vec![0.0, 1.0]).unwrap()).unwrap();
    let bv = g.param(b);
    let y1 = g.linear(x1, a, bv).unwrap();
    let y2 = g.linear(x2, a2, bv).unwrap();
    let s = g.add(y1, y2).unwrap();
    let t = g.sum_all(s).unwrap();
    let grads = g.backward(t).unwrap();
    // Both uses contribute: dW = x1ᵀ·1 + x2ᵀ·1 = all ones.
    assert_eq!(grads.param(w).unwrap().data(), &[1.0, 1.0, 1.0, 1.0]);
    assert_eq!(grads.param(b).unwrap().data(), &[2.0, 2.0]);
    assert_eq!(g.params_read().len(), 2);
}

#[test]
fn non_finite_values_trip_an_error() {
    let store = ParamStore::<f64>::new();
    let mut g = Graph::new(&store);
    assert!(g.input(Tensor::from_vec(&[1], vec![f64::NAN]).unwrap()).is_err());
    let big = g.input(Tensor::from_vec(&[1, 1], vec![1e300]).unwrap()).unwrap();
    let w = g.input(Tensor::from_vec(&[1, 1], vec![1e300]).unwrap()).unwrap();
    let b = g.input(Tensor::zeros(&[1])).unwrap();
    assert!(g.linear(big, w, b).is_err());
}
