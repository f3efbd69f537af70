use super::{DualStreamModel, Side};
use crate::encoder::EncodedPair;
use crate::nn::{adam_step, Graph, OptimizerConfig, ParamId, Real, Tensor};
use crate::{parallel, Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct TrainExample {
    pub input: EncodedPair,
    pub label: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean total loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

struct Prepared<T> {
    rgb: Tensor<T>,
    descriptor: Tensor<T>,
    label: Tensor<T>,
}

fn example_grads<T: Real>(model: &DualStreamModel<T>, ex: &Prepared<T>) -> Result<(f64, Vec<(ParamId, Tensor<T>)>)> {
    let mut g = Graph::new(model.store());
    let r = g.input(ex.rgb.clone())?;
    let d = g.input(ex.descriptor.clone())?;
    let vars = model.forward_graph(&mut g, r, d)?;
    let loss = model.total_loss(&mut g, &vars, &ex.label)?;
    let value = g.value(loss).item().as_f64();
    Ok((value, g.backward(loss)?.into_params()))
}

/// Mini-batch Adam on the summed head losses. Examples are reshuffled each
/// epoch from `seed`; per-example gradients are computed in parallel and
/// reduced in batch order, so results do not depend on the thread count.
pub fn train<T: Real>(
    model: &mut DualStreamModel<T>,
    examples: &[TrainExample],
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<TrainReport> {
    opt.validate()?;
    if examples.is_empty() {
        return Err(Error::Dataset("no training examples".into()));
    }
    let classes = model.config().classes;
    let prepared = examples
        .iter()
        .map(|ex| {
            if ex.side != model.side() {
                return Err(Error::Dataset(format!(
                    "{} example in a {} training set",
                    ex.side,
                    model.side()
                )));
            }
            if ex.label >= classes {
                return Err(Error::Labels(format!("label {} out of range for {classes} classes", ex.label)));
            }
            let mut onehot = vec![0.0; classes];
            onehot[ex.label] = 1.0;
            Ok(Prepared {
                rgb: model.image_tensor(&ex.input.rgb)?,
                descriptor: model.image_tensor(&ex.input.descriptor)?,
                label: Tensor::from_f64(&[1, classes], &onehot)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(opt.epochs),
        learning_rates: Vec::with_capacity(opt.epochs),
    };
    for epoch in 0..opt.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(opt.batch_size) {
            let results = parallel::map(batch, |&i| example_grads(model, &prepared[i]));
            let mut total: Vec<Option<Tensor<T>>> = vec![None; model.store().len()];
            for r in results {
                let (loss, grads) = r?;
                loss_sum += loss;
                for (id, g) in grads {
                    match &mut total[id.index()] {
                        Some(t) => t.add_assign(&g),
                        slot => *slot = Some(g),
                    }
                }
            }
            let scale = T::from_f64(1.0 / batch.len() as f64);
            let store = model.store_mut();
            let ids: Vec<ParamId> = store.ids().collect();
            for (id, g) in ids.into_iter().zip(total) {
                let mut g = g.unwrap_or_else(|| Tensor::zeros(store.value(id).shape()));
                g.data_mut().iter_mut().for_each(|x| *x *= scale);
                store.set_grad(id, g)?;
            }
            adam_step(store, opt, epoch)?;
        }
        let mean = loss_sum / prepared.len() as f64;
        let lr = opt.learning_rate(epoch);
        log::info!("epoch {epoch:>4}  loss {mean:.6}  lr {lr:.2e}");
        report.epoch_losses.push(mean);
        report.learning_rates.push(lr);
    }
    Ok(report)
}
