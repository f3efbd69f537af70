use super::ops::{self, ConvGeom};
use super::{ParamId, ParamStore, Real, Tensor};
use crate::{Error, Result};
use std::collections::HashMap;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Conv2d { x: Var, w: Var, b: Var, geom: ConvGeom },
    MaxPool2 { x: Var, argmax: Vec<usize> },
    Relu(Var),
    Reshape(Var),
    Linear { x: Var, w: Var, b: Var },
    Maximum(Var, Var),
    Add(Var, Var),
    SumAll(Var),
    SoftmaxCrossEntropy { logits: Var, labels: Tensor<f64>, probs: Vec<f64> },
}

#[derive(Debug)]
struct Node<T> {
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor<T>>,
    op: Op,
}

/// Tape of operations for one forward pass.
pub struct Graph<'a, T> {
    store: &'a ParamStore<T>,
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<ParamId, Var>,
}

fn finite<T: Real>(t: Tensor<T>, op: &'static str) -> Result<Tensor<T>> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Error::NonFinite(op))
    }
}

impl<'a, T: Real> Graph<'a, T> {
    pub fn new(store: &'a ParamStore<T>) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    fn push(&mut self, value: Tensor<T>, op: Op) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.store.value(*id),
            _ => unreachable!("node without value"),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parameters read so far, each listed once.
    pub fn params_read(&self) -> Vec<ParamId> {
        let mut ids: Vec<_> = self.param_nodes.keys().copied().collect();
        ids.sort();
        ids
    }

    pub fn input(&mut self, t: Tensor<T>) -> Result<Var> {
        let t = finite(t, "input")?;
        Ok(self.push(t, Op::Input))
    }

    /// Leaf for a stored parameter. Repeated reads return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes.insert(id, v);
        v
    }

    /// Stride-1 convolution with square kernels and right/bottom zero
    /// padding, so the spatial size is preserved.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws, bs) = (self.value(x).shape(), self.value(w).shape(), self.value(b).shape());
        if xs.len() != 4 || ws.len() != 4 || ws[2] != ws[3] || xs[1] != ws[1] || bs != [ws[0]] {
            return Err(Error::Shape(format!(
                "conv2d input {xs:?}, weight {ws:?}, bias {bs:?}"
            )));
        }
        let geom = ConvGeom {
            n: xs[0],
            ci: xs[1],
            h: xs[2],
            w: xs[3],
            co: ws[0],
            k: ws[2],
        };
        let out = ops::conv2d_forward(
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            geom,
        );
        let t = finite(Tensor::from_vec(&[geom.n, geom.co, geom.h, geom.w], out)?, "conv2d")?;
        Ok(self.push(t, Op::Conv2d { x, w, b, geom }))
    }

    pub fn maxpool2(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).shape().to_vec();
        if s.len() != 4 || !s[2].is_multiple_of(2) || !s[3].is_multiple_of(2) {
            return Err(Error::Shape(format!("maxpool2 needs even spatial dims, got {s:?}")));
        }
        let (out, argmax) = ops::maxpool2_forward(self.value(x).data(), s[0] * s[1], s[2], s[3]);
        let t = Tensor::from_vec(&[s[0], s[1], s[2] / 2, s[3] / 2], out)?;
        Ok(self.push(t, Op::MaxPool2 { x, argmax }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let mut t = self.value(x).clone();
        for v in t.data_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        self.push(t, Op::Relu(x))
    }

    /// Collapses all but the leading (batch) dimension.
    pub fn flatten(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).shape();
        let n = s.first().copied().unwrap_or(1);
        let d = s.iter().skip(1).product();
        let t = self.value(x).clone().reshape(&[n, d])?;
        Ok(self.push(t, Op::Reshape(x)))
    }

    /// `x (N×D) · w (D×K) + b (K)`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws, bs) = (self.value(x).shape(), self.value(w).shape(), self.value(b).shape());
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] || bs != [ws[1]] {
            return Err(Error::Shape(format!(
                "linear input {xs:?}, weight {ws:?}, bias {bs:?}"
            )));
        }
        let (n, d, k) = (xs[0], xs[1], ws[1]);
        let out = ops::linear_forward(
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            n,
            d,
            k,
        );
        let t = finite(Tensor::from_vec(&[n, k], out)?, "linear")?;
        Ok(self.push(t, Op::Linear { x, w, b }))
    }

    fn same_shape(&self, a: Var, b: Var, op: &str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::Shape(format!(
                "{op}: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        Ok(())
    }

    /// Elementwise max. On ties the gradient goes to `a`.
    pub fn maximum(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "maximum")?;
        let mut t = self.value(a).clone();
        for (x, &y) in t.data_mut().iter_mut().zip(self.value(b).data()) {
            if y > *x {
                *x = y;
            }
        }
        Ok(self.push(t, Op::Maximum(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let mut t = self.value(a).clone();
        t.add_assign(self.value(b));
        let t = finite(t, "add")?;
        Ok(self.push(t, Op::Add(a, b)))
    }

    pub fn sum_all(&mut self, x: Var) -> Result<Var> {
        let s: T = self.value(x).data().iter().copied().sum();
        let t = finite(Tensor::scalar(s), "sum")?;
        Ok(self.push(t, Op::SumAll(x)))
    }

    /// Mean over the batch of `-Σ_j l_ij log softmax(y)_ij` for one-hot
    /// `labels` (`N × C`). Computed in `f64` with log-sum-exp.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &Tensor<T>) -> Result<Var> {
        let ls = self.value(logits).shape();
        if ls.len() != 2 || labels.shape() != ls {
            return Err(Error::Shape(format!(
                "logits {ls:?} vs labels {:?}",
                labels.shape()
            )));
        }
        let (n, c) = (ls[0], ls[1]);
        let labels = Tensor::<f64>::from_vec(ls, labels.to_f64_vec())?;
        for row in labels.data().chunks_exact(c) {
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            if ones != 1 || row.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::Labels(format!("row {row:?} is not one-hot")));
            }
        }
        let y = self.value(logits).to_f64_vec();
        let mut probs = Vec::with_capacity(n * c);
        let mut loss = 0.0;
        for (row, lab) in y.chunks_exact(c).zip(labels.data().chunks_exact(c)) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            for (&v, &l) in row.iter().zip(lab) {
                probs.push((v - lse).exp());
                loss -= l * (v - lse);
            }
        }
        loss /= n as f64;
        let t = finite(Tensor::scalar(T::from_f64(loss)), "softmax_cross_entropy")?;
        Ok(self.push(t, Op::SoftmaxCrossEntropy { logits, labels, probs }))
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        if self.value(root).len() != 1 {
            return Err(Error::Shape("backward needs a scalar root".into()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Tensor::from_vec(self.value(root).shape(), vec![T::one()])?);

        fn acc<T: Real>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
            match slot {
                Some(t) => t.add_assign(&g),
                None => *slot = Some(g),
            }
        }

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Input | Op::Param(_) => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Conv2d { x, w, b, geom } => {
                    let (gx, gw, gb) = ops::conv2d_backward(
                        self.value(*x).data(),
                        self.value(*w).data(),
                        g.data(),
                        *geom,
                    );
                    acc(&mut grads[x.0], Tensor::from_vec(self.value(*x).shape(), gx)?);
                    acc(&mut grads[w.0], Tensor::from_vec(self.value(*w).shape(), gw)?);
                    acc(&mut grads[b.0], Tensor::from_vec(self.value(*b).shape(), gb)?);
                }
                Op::MaxPool2 { x, argmax } => {
                    let mut gx = Tensor::zeros(self.value(*x).shape());
                    let d = gx.data_mut();
                    for (&src, &gv) in argmax.iter().zip(g.data()) {
                        d[src] += gv;
                    }
                    acc(&mut grads[x.0], gx);
                }
                Op::Relu(x) => {
                    let mut gx = g;
                    let out = self.nodes[i].value.as_ref().unwrap();
                    for (gv, &o) in gx.data_mut().iter_mut().zip(out.data()) {
                        if o <= T::zero() {
                            *gv = T::zero();
                        }
                    }
                    acc(&mut grads[x.0], gx);
                }
                Op::Reshape(x) => {
                    acc(&mut grads[x.0], g.reshape(self.value(*x).shape())?);
                }
                Op::Linear { x, w, b } => {
                    let (xs, ws) = (self.value(*x).shape(), self.value(*w).shape());
                    let (gx, gw, gb) = ops::linear_backward(
                        self.value(*x).data(),
                        self.value(*w).data(),
                        g.data(),
                        xs[0],
                        xs[1],
                        ws[1],
                    );
                    acc(&mut grads[x.0], Tensor::from_vec(xs, gx)?);
                    acc(&mut grads[w.0], Tensor::from_vec(ws, gw)?);
                    acc(&mut grads[b.0], Tensor::from_vec(&[ws[1]], gb)?);
                }
                Op::Maximum(a, b) => {
                    let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                    let mut ga = Tensor::zeros(g.shape());
                    let mut gb = Tensor::zeros(g.shape());
                    for k in 0..g.len() {
                        if va[k] >= vb[k] {
                            ga.data_mut()[k] = g.data()[k];
                        } else {
                            gb.data_mut()[k] = g.data()[k];
                        }
                    }
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads[a.0], g.clone());
                    acc(&mut grads[b.0], g);
                }
                Op::SumAll(x) => {
                    let s = self.value(*x).shape();
                    let n = self.value(*x).len();
                    acc(&mut grads[x.0], Tensor::from_vec(s, vec![g.item(); n])?);
                }
                Op::SoftmaxCrossEntropy { logits, labels, probs } => {
                    let n = labels.shape()[0] as f64;
                    let scale = g.item().as_f64() / n;
                    let gl: Vec<T> = probs
                        .iter()
                        .zip(labels.data())
                        .map(|(&p, &l)| T::from_f64((p - l) * scale))
                        .collect();
                    acc(&mut grads[logits.0], Tensor::from_vec(labels.shape(), gl)?);
                }
            }
        }

        let mut params = Vec::new();
        for (id, v) in &self.param_nodes {
            if let Some(g) = grads[v.0].take() {
                params.push((*id, g));
            }
        }
        params.sort_by_key(|(id, _)| *id);
        Ok(Gradients { nodes: grads, params })
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients<T> {
    nodes: Vec<Option<Tensor<T>>>,
    params: Vec<(ParamId, Tensor<T>)>,
}

impl<T: Real> Gradients<T> {
    /// Gradient with respect to an input node.
    pub fn input(&self, v: Var) -> Option<&Tensor<T>> {
        self.nodes[v.0].as_ref()
    }

    /// Parameter gradients ordered by id.
    pub fn params(&self) -> &[(ParamId, Tensor<T>)] {
        &self.params
    }

    pub fn into_params(self) -> Vec<(ParamId, Tensor<T>)> {
        self.params
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.params.iter().find(|(p, _)| *p == id).map(|(_, g)| g)
    }
}
